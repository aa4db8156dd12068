//! Library results checked against the independent references in `kpart-testkit`.

use kpart_core::{
    best_subsets, build_design_matrix, fit_kpart, fit_ols, pick_winner, select_knots, ColumnRole,
    CrimeSeries, DesignMatrix, Knot, KnotSet,
};
use kpart_testkit::{
    design_rows, enumerate_subsets, interior_knots, jittered_unit_grid, normal_equations_fit,
    oracle_winner, plus_cube,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn knot_set(x: &[f64], locs: &[f64]) -> KnotSet {
    KnotSet::new(
        locs.iter()
            .enumerate()
            .map(|(i, &t)| Knot {
                location: t,
                partition_index: i + 1,
                source_index: i + 1,
            })
            .collect(),
        x,
    )
}

fn random_design(rng: &mut StdRng, n: usize, p: usize) -> DesignMatrix {
    let mut cols = vec![(ColumnRole::Intercept, vec![1.0; n])];
    for j in 1..p {
        let col: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        cols.push((ColumnRole::Knot(j as f64), col));
    }
    DesignMatrix::from_columns(cols).unwrap()
}

#[test]
fn recovers_exact_coefficients() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let x = random_design(&mut rng, 50, 6);
        let beta: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y = x.mul_vec(&beta).unwrap();
        let fit = fit_ols(&x, &y).unwrap();
        for (b, e) in fit.coefficients.iter().zip(&beta) {
            assert!((b - e).abs() <= 1e-8 * e.abs().max(1.0), "{b} vs {e}");
        }
        assert!(fit.rss < 1e-20);
    }
}

#[test]
fn agrees_with_normal_equations() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(20..60);
        let x = jittered_unit_grid(&mut rng, n);
        let m = rng.gen_range(0..4);
        let knots = interior_knots(&mut rng, &x, m);
        let y: Vec<f64> = x
            .iter()
            .map(|v| (4.0 * v).sin() + rng.gen_range(-0.2..0.2))
            .collect();
        let ks = knot_set(&x, &knots);
        let design = build_design_matrix(&x, &ks, &vec![true; ks.len()]).unwrap();
        let fit = fit_ols(&design, &y).unwrap();
        let reference = normal_equations_fit(&design_rows(&x, &knots), &y).unwrap();
        for (a, b) in fit.fitted.iter().zip(&reference.fitted) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
        let direct_rss: f64 = fit.residuals(&y).map(|r| r * r).sum();
        assert!((fit.rss - direct_rss).abs() <= 1e-10 * direct_rss);
        let mean = y.iter().sum::<f64>() / n as f64;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((fit.r2 - (1.0 - fit.rss / tss)).abs() < 1e-12);
        let adj = 1.0 - (1.0 - fit.r2) * (n as f64 - 1.0) / (n - fit.p) as f64;
        assert!((fit.r2_adj - adj).abs() < 1e-12);
        assert!(fit.r2_adj < fit.r2);
    }
}

#[test]
fn residuals_are_orthogonal_to_columns() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.gen_range(20..60);
        let x = jittered_unit_grid(&mut rng, n);
        let m = rng.gen_range(0..5);
        let knots = interior_knots(&mut rng, &x, m);
        let ks = knot_set(&x, &knots);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let design = build_design_matrix(&x, &ks, &vec![true; ks.len()]).unwrap();
        let fit = fit_ols(&design, &y).unwrap();
        let resid: Vec<f64> = fit.residuals(&y).collect();
        let xty_max = (0..design.ncols())
            .map(|j| {
                design
                    .column(j)
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        for j in 0..design.ncols() {
            let dot: f64 = design
                .column(j)
                .iter()
                .zip(&resid)
                .map(|(a, b)| a * b)
                .sum();
            assert!(dot.abs() <= 1e-8 * xty_max, "column {j}: {dot}");
        }
    }
}

#[test]
fn t_statistics_match_textbook_formula() {
    let mut rng = StdRng::seed_from_u64(17);
    let x = random_design(&mut rng, 40, 4);
    let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fit = fit_ols(&x, &y).unwrap();
    // (X^T X)^-1 by Gauss-Jordan on the 4x4 Gram matrix
    let p = 4;
    let mut g = vec![vec![0.0; 2 * p]; p];
    for a in 0..p {
        for b in 0..p {
            g[a][b] = x
                .column(a)
                .iter()
                .zip(x.column(b))
                .map(|(u, v)| u * v)
                .sum();
        }
        g[a][p + a] = 1.0;
    }
    for c in 0..p {
        let piv = g[c][c];
        for v in g[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..p {
            if r != c {
                let f = g[r][c];
                let row_c = g[c].clone();
                for (v, w) in g[r].iter_mut().zip(row_c) {
                    *v -= f * w;
                }
            }
        }
    }
    let sigma2 = fit.rss / (40 - p) as f64;
    for j in 0..p {
        let se = (sigma2 * g[j][p + j]).sqrt();
        assert!((fit.std_errors[j] - se).abs() <= 1e-9 * se);
        assert!(
            (fit.t_stats[j] - fit.coefficients[j] / se).abs()
                <= 1e-8 * fit.t_stats[j].abs().max(1.0)
        );
    }
}

#[test]
fn best_subsets_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(19);
    for _ in 0..60 {
        let n = rng.gen_range(20..60);
        let x = jittered_unit_grid(&mut rng, n);
        let m = rng.gen_range(1..=8);
        let knots = interior_knots(&mut rng, &x, m);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ks = knot_set(&x, &knots);
        let sel = best_subsets(&x, &y, &ks).unwrap();
        let oracle = enumerate_subsets(&x, &y, &knots);
        assert_eq!(sel.table.len(), oracle.len());
        for (got, want) in sel.table.iter().zip(&oracle) {
            assert_eq!(got.mask, want.mask);
            assert_eq!(got.p, want.p);
            let (a, b) = (got.bic().unwrap(), want.bic.unwrap());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
        assert_eq!(sel.winning_mask, oracle_winner(&oracle).unwrap().mask);

        let min_bic = sel
            .table
            .iter()
            .filter_map(|e| e.bic())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sel.winner_bic, min_bic);
        let empty_rss = sel.table[0].rss().unwrap();
        assert!(sel.winner.rss <= empty_rss);

        let mut shuffled: Vec<_> = sel.table.iter().collect();
        shuffled.shuffle(&mut rng);
        assert_eq!(pick_winner(shuffled).unwrap().mask, sel.winning_mask);
    }
}

#[test]
fn zero_noise_selects_exactly_the_true_knot() {
    let x: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
    let candidates = [x[6], x[14], x[22]];
    let ks = knot_set(&x, &candidates);
    let y: Vec<f64> = x
        .iter()
        .map(|&v| 0.5 - 0.2 * v + 0.3 * v * v - 0.1 * v.powi(3) + 5.0 * plus_cube(v, candidates[1]))
        .collect();
    let sel = best_subsets(&x, &y, &ks).unwrap();
    assert_eq!(sel.winning_mask, vec![false, true, false]);
    let oracle = enumerate_subsets(&x, &y, &candidates);
    assert_eq!(
        oracle_winner(&oracle).unwrap().mask,
        vec![false, true, false]
    );
    // subsets without the true knot leave a real residual
    for e in &sel.table {
        if !e.mask[1] {
            assert!(e.rss().unwrap() > 1e-8);
        }
    }
}

#[test]
fn scaled_and_raw_predictors_give_same_fit() {
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..30 {
        let n = rng.gen_range(20..50);
        let raw: Vec<f64> = jittered_unit_grid(&mut rng, n)
            .iter()
            .map(|v| 1.0 + 2.0 * v)
            .collect();
        let (lo, span) = (raw[0], raw[n - 1] - raw[0]);
        let scaled: Vec<f64> = raw.iter().map(|u| (u - lo) / span).collect();
        let raw_knots = interior_knots(&mut rng, &raw, 3);
        let scaled_knots: Vec<f64> = raw_knots.iter().map(|u| (u - lo) / span).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a = best_subsets(&raw, &y, &knot_set(&raw, &raw_knots)).unwrap();
        let b = best_subsets(&scaled, &y, &knot_set(&scaled, &scaled_knots)).unwrap();
        assert_eq!(a.winning_mask, b.winning_mask);
        for (u, v) in a.winner.fitted.iter().zip(&b.winner.fitted) {
            assert!((u - v).abs() <= 1e-8 * v.abs().max(1e-3));
        }
        assert!((a.winner_bic - b.winner_bic).abs() <= 1e-8 * b.winner_bic.abs());
    }
}

#[test]
fn remainder_row_enters_the_fit() {
    let years: Vec<i32> = (2000..2011).collect();
    let pop: Vec<f64> = (0..11)
        .map(|i| 5.0e5 + 1.0e4 * i as f64 + 300.0 * (i * i) as f64)
        .collect();
    let rates = [
        0.004, 0.0045, 0.0052, 0.0049, 0.0051, 0.0047, 0.0043, 0.0041, 0.0046, 0.0044, 0.0060,
    ];
    let full = CrimeSeries::from_rates("s", &years, &pop, &rates).unwrap();
    let res = fit_kpart(&full, 2).unwrap();
    assert!(res.knots.knots().iter().all(|k| k.source_index <= 10));

    // dropping observation 11 gives the same candidate knots but a different fit
    let x_full = res.x_scaled.clone();
    let ks = select_knots(&x_full[..10], &rates[..10], 2).unwrap();
    assert_eq!(ks.locations(), res.knots.locations());
    let with = best_subsets(&x_full, &rates, &res.knots).unwrap();
    let without = best_subsets(&x_full[..10], &rates[..10], &ks).unwrap();
    let mask = vec![false; ks.len()];
    let a = fit_ols(
        &build_design_matrix(&x_full, &res.knots, &mask).unwrap(),
        &rates,
    )
    .unwrap();
    let b = fit_ols(
        &build_design_matrix(&x_full[..10], &ks, &mask).unwrap(),
        &rates[..10],
    )
    .unwrap();
    assert!(a
        .coefficients
        .iter()
        .zip(&b.coefficients)
        .any(|(u, v)| (u - v).abs() > 1e-9));
    assert_eq!(with.winner.n, 11);
    assert_eq!(without.winner.n, 10);
}

#[test]
fn pipeline_is_deterministic_and_bounded() {
    let mut rng = StdRng::seed_from_u64(29);
    for _ in 0..10 {
        let n: usize = rng.gen_range(30..56);
        let k = rng.gen_range(1..=10);
        let years: Vec<i32> = (0..n as i32).map(|i| 1960 + i).collect();
        let pop: Vec<f64> = (0..n)
            .map(|i| 1.0e6 * (1.0 + 0.02 * i as f64) + rng.gen_range(0.0..5e3))
            .collect();
        let rates: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.01)).collect();
        let s = CrimeSeries::from_rates("r", &years, &pop, &rates).unwrap();
        let a = fit_kpart(&s, k).unwrap();
        let b = fit_kpart(&s, k).unwrap();
        assert_eq!(a, b);
        assert!(a.winner().p <= k + 4);
        assert_eq!(a.selection.table.len(), 1 << a.knots.len());
        for e in &a.selection.table {
            assert_eq!(e.p, 4 + e.mask.iter().filter(|&&m| m).count());
        }
    }
}
