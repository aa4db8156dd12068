use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kpart_core::{
    fit_kpart_with_limit, load_series, CrimeSeries, LoadReport, ModelSelectionResult,
};
use rayon::prelude::*;

use crate::document::ModelDocument;
use crate::{max_k_from_env, CliError, ColumnArgs, CurveArgs, FitArgs, RateArgs, ReportArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, columns: &ColumnArgs) -> Result<(CrimeSeries, LoadReport), CliError> {
    load_series(path, &columns.column_map())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn note_skipped(path: &Path, report: &LoadReport) {
    if report.rows_skipped() > 0 {
        eprintln!("kpart: {}: {report}", path.display());
    }
}

pub fn rate(args: &RateArgs) -> Result<(), CliError> {
    let (series, report) = load(&args.input, &args.columns)?;
    note_skipped(&args.input, &report);
    if !series.has_counts() {
        eprintln!(
            "kpart: warning: {} already holds rates; passing them through unchanged",
            args.input.display()
        );
    }
    let mut text = String::from("year,population,rate\n");
    for o in series.observations() {
        writeln!(text, "{},{},{}", o.year(), o.population(), o.rate()).unwrap();
    }
    emit(args.out.as_deref(), &text)
}

fn check_k(k: usize, n: usize, max_k: usize) -> Result<(), CliError> {
    if k > max_k {
        return Err(CliError::Usage(format!(
            "--k {k} exceeds the enumeration cap of {max_k} (KPART_MAX_K)"
        )));
    }
    if k > n {
        return Err(CliError::Usage(format!(
            "--k {k} exceeds the number of observations ({n})"
        )));
    }
    Ok(())
}

pub fn summary(res: &ModelSelectionResult) -> String {
    let fit = res.winner();
    let mut s = String::new();
    writeln!(
        s,
        "series {}: n = {}, K = {}, {} candidate knots",
        res.series_name,
        fit.n,
        res.k_requested,
        res.knots.len()
    )
    .unwrap();
    let knots = res.winning_knots_raw();
    writeln!(s, "selected knots: {}", knots.len()).unwrap();
    for (year, t) in res.selected_years.iter().zip(&knots) {
        writeln!(s, "  year {year}  population {t}").unwrap();
    }
    writeln!(s, "parameters: {}", fit.p).unwrap();
    writeln!(s, "R^2: {:.6}", fit.r2).unwrap();
    writeln!(
        s,
        "adjusted R^2: {:.6} ({:.2}%)",
        fit.r2_adj,
        100.0 * fit.r2_adj
    )
    .unwrap();
    writeln!(s, "BIC: {:.6}", res.winner_bic()).unwrap();
    s
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let max_k = max_k_from_env()?;
    let k = args.k as usize;
    let (series, report) = load(&args.input, &args.columns)?;
    note_skipped(&args.input, &report);
    check_k(k, series.len(), max_k)?;
    let res = fit_kpart_with_limit(&series, k, max_k)?;
    let doc = ModelDocument::from_result(&res);
    let text = summary(&res);
    match &args.out {
        Some(path) => {
            emit(Some(path), &doc.to_json())?;
            print!("{text}");
        }
        None => {
            eprint!("{text}");
            print!("{}", doc.to_json());
        }
    }
    Ok(())
}

pub fn curve(args: &CurveArgs) -> Result<(), CliError> {
    let doc = ModelDocument::read(&args.input).map_err(CliError::Input)?;
    let xs: Vec<f64> = match &args.at {
        Some(path) => load(path, &args.columns)?.0.populations(),
        None => {
            let (lo, hi) = doc.raw_range();
            let m = args.points as usize;
            (0..m)
                .map(|i| {
                    if i + 1 == m {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (m - 1) as f64
                    }
                })
                .collect()
        }
    };
    let ys = doc.predict_raw(&xs).map_err(CliError::Input)?;
    let mut text = String::from("x_raw\ty_fitted\n");
    for (x, y) in xs.iter().zip(&ys) {
        writeln!(text, "{x}\t{y}").unwrap();
    }
    text.push_str("# knots:\n");
    for t in &doc.knots_raw_units {
        writeln!(text, "# {t}").unwrap();
    }
    emit(args.out.as_deref(), &text)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct ReportRow {
    name: String,
    n: Option<usize>,
    outcome: Result<(usize, f64, f64), String>,
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let max_k = max_k_from_env()?;
    let k = args.k as usize;
    if k > max_k {
        return Err(CliError::Usage(format!(
            "--k {k} exceeds the enumeration cap of {max_k} (KPART_MAX_K)"
        )));
    }
    let entries = std::fs::read_dir(&args.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();

    let rows: Vec<ReportRow> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match load(path, &args.columns) {
                Err(e) => ReportRow {
                    name,
                    n: None,
                    outcome: Err(e.message().to_string()),
                },
                Ok((series, _)) => {
                    let n = series.len();
                    let outcome = check_k(k, n, max_k)
                        .map_err(|e| e.message().to_string())
                        .and_then(|()| {
                            fit_kpart_with_limit(&series, k, max_k).map_err(|e| e.to_string())
                        })
                        .map(|res| {
                            (
                                res.winning_knots_scaled().len(),
                                res.winner().r2_adj,
                                res.winner_bic(),
                            )
                        });
                    ReportRow {
                        name,
                        n: Some(n),
                        outcome,
                    }
                }
            }
        })
        .collect();

    if rows.iter().all(|r| r.n.is_none()) {
        return Err(CliError::Input(format!(
            "no series could be loaded from {}",
            args.input.display()
        )));
    }

    let mut text = String::from("name,n,k,knots,r2_adj,bic,error\n");
    let (mut above90, mut above70) = (0, 0);
    for row in &rows {
        let n = row.n.map(|n| n.to_string()).unwrap_or_default();
        match &row.outcome {
            Ok((knots, r2_adj, bic)) => {
                above90 += usize::from(*r2_adj > 0.90);
                above70 += usize::from(*r2_adj > 0.70);
                writeln!(
                    text,
                    "{},{n},{k},{knots},{r2_adj},{bic},",
                    csv_field(&row.name)
                )
                .unwrap();
            }
            Err(msg) => {
                eprintln!("kpart: {}: {msg}", row.name);
                writeln!(
                    text,
                    "{},{n},{k},,,,{}",
                    csv_field(&row.name),
                    csv_field(msg)
                )
                .unwrap();
            }
        }
    }
    let total = rows.len();
    writeln!(
        text,
        "# {above90} of {total} above 0.90; {above70} of {total} above 0.70"
    )
    .unwrap();
    emit(args.out.as_deref(), &text)
}
