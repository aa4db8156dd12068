//! Reference implementations used as test oracles.
//!
//! Nothing here calls into `kpart-core`: the spline columns, the least squares
//! solve (normal equations + Cholesky) and the subset enumeration are all
//! written independently so they can check the library.

use rand::seq::SliceRandom;
use rand::Rng;

/// Fraction of `sum(y^2)` below which an RSS counts as an exact fit.
pub const RSS_RESOLUTION: f64 = 1e-20;

pub fn plus_cube(x: f64, t: f64) -> f64 {
    if x > t {
        (x - t).powi(3)
    } else {
        0.0
    }
}

/// Row-major design `[1, x, x^2, x^3, (x - t_k)_+^3 ...]`.
pub fn design_rows(x: &[f64], knots: &[f64]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&v| {
            let mut row = vec![1.0, v, v.powi(2), v.powi(3)];
            row.extend(knots.iter().map(|&t| plus_cube(v, t)));
            row
        })
        .collect()
}

pub struct NormalFit {
    pub beta: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
}

/// Least squares through the normal equations with unit-norm column scaling
/// and a Cholesky factorisation. `None` when the Gram matrix is not numerically
/// positive definite.
pub fn normal_equations_fit(rows: &[Vec<f64>], y: &[f64]) -> Option<NormalFit> {
    let n = rows.len();
    let p = rows.first()?.len();
    let norms: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) {
        return None;
    }
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for a in 0..p {
            let ra = r[a] / norms[a];
            rhs[a] += ra * yi;
            for b in 0..=a {
                gram[a][b] += ra * r[b] / norms[b];
            }
        }
    }
    // lower Cholesky in place
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = gram[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 1e-13 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (rhs[i] - s) / l[i][i];
    }
    let mut w = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|k| l[k][i] * w[k]).sum();
        w[i] = (z[i] - s) / l[i][i];
    }
    let beta: Vec<f64> = w.iter().zip(&norms).map(|(a, c)| a / c).collect();
    let fitted: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
        .collect();
    let rss = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    debug_assert_eq!(fitted.len(), n);
    Some(NormalFit { beta, fitted, rss })
}

pub fn oracle_bic(rss: f64, y_sumsq: f64, n: usize, p: usize) -> f64 {
    let floor = (RSS_RESOLUTION * y_sumsq).max(f64::MIN_POSITIVE);
    let rss = if rss < floor { floor } else { rss };
    let n = n as f64;
    n * (rss / n).ln() + (p as f64 + 1.0) * n.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub mask: Vec<bool>,
    pub p: usize,
    pub rss: Option<f64>,
    pub bic: Option<f64>,
}

/// Every subset of `knots`, listed with bit `i` of the counter switching knot `i`.
pub fn enumerate_subsets(x: &[f64], y: &[f64], knots: &[f64]) -> Vec<OracleEntry> {
    let m = knots.len();
    let n = y.len();
    let y_sumsq: f64 = y.iter().map(|v| v * v).sum();
    let mut out = Vec::new();
    for counter in 0..(1usize << m) {
        let mask: Vec<bool> = (0..m).map(|i| (counter >> i) & 1 == 1).collect();
        let chosen: Vec<f64> = knots
            .iter()
            .zip(&mask)
            .filter(|(_, on)| **on)
            .map(|(t, _)| *t)
            .collect();
        let p = 4 + chosen.len();
        let fit = if n >= p + 2 {
            normal_equations_fit(&design_rows(x, &chosen), y)
        } else {
            None
        };
        out.push(OracleEntry {
            mask,
            p,
            rss: fit.as_ref().map(|f| f.rss),
            bic: fit.map(|f| oracle_bic(f.rss, y_sumsq, n, p)),
        });
    }
    out
}

/// Minimum BIC, then fewer parameters, then first differing knot switched off.
pub fn oracle_winner(table: &[OracleEntry]) -> Option<&OracleEntry> {
    let mut best: Option<&OracleEntry> = None;
    for e in table {
        let Some(b) = e.bic else { continue };
        let replace = match best {
            None => true,
            Some(cur) => {
                let cb = cur.bic.unwrap();
                if b != cb {
                    b < cb
                } else if e.p != cur.p {
                    e.p < cur.p
                } else {
                    let first_diff = e.mask.iter().zip(&cur.mask).position(|(a, c)| a != c);
                    matches!(first_diff, Some(i) if !e.mask[i])
                }
            }
        };
        if replace {
            best = Some(e);
        }
    }
    best
}

/// Sorted predictor on [0, 1] with both endpoints present.
pub fn random_unit_grid<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n - 2).map(|_| rng.gen_range(0.0..1.0)).collect();
    x.push(0.0);
    x.push(1.0);
    x.sort_by(f64::total_cmp);
    x.dedup();
    while x.len() < n {
        x.push(rng.gen_range(0.0..1.0));
        x.sort_by(f64::total_cmp);
        x.dedup();
    }
    x
}

/// Evenly spread predictor on [0, 1] with a small random jitter.
pub fn jittered_unit_grid<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                i as f64 * h
            } else {
                i as f64 * h + rng.gen_range(-0.3..0.3) * h
            }
        })
        .collect()
}

/// `m` knot locations drawn from interior points of `x`, at least two indices
/// apart and away from both ends, returned in increasing order.
pub fn interior_knots<R: Rng>(rng: &mut R, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (2..n - 2).collect();
    idx.shuffle(rng);
    let mut chosen: Vec<usize> = Vec::new();
    for i in idx {
        if chosen.len() == m {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(i) >= 2) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| x[i]).collect()
}

/// Spline value from explicit coefficients.
pub fn spline_value(beta: &[f64], knots: &[f64], x: f64) -> f64 {
    let mut s = beta[0] + beta[1] * x + beta[2] * x * x + beta[3] * x * x * x;
    for (t, c) in knots.iter().zip(&beta[4..]) {
        s += c * plus_cube(x, *t);
    }
    s
}
