//! Least squares via Householder QR with column pivoting, plus fit statistics.

use crate::basis::DesignMatrix;
use crate::error::{KpartError, Result};

/// A diagonal entry of R at or below this fraction of the largest one marks the
/// design as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Ordered like the design matrix columns.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares about the mean of y.
    pub tss: f64,
    pub r2: f64,
    pub r2_adj: f64,
    pub n: usize,
    /// Number of columns, intercept included.
    pub p: usize,
    pub sigma2_hat: f64,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
}

impl FitResult {
    pub fn residuals<'a>(&'a self, y: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        y.iter().zip(&self.fitted).map(|(a, b)| a - b)
    }
}

/// Gaussian BIC counting `p` coefficients plus the error variance:
/// `n ln(rss / n) + (p + 1) ln(n)`.
pub fn bic(rss: f64, n: usize, p: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + (p as f64 + 1.0) * nf.ln()
}

/// Exactly zero for a constant response, whatever rounding the mean picks up.
pub fn total_sum_of_squares(y: &[f64]) -> f64 {
    if y.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// R^2 and adjusted R^2. Both are defined as 0 when y is constant.
pub fn r_squared(rss: f64, tss: f64, n: usize, p: usize) -> (f64, f64) {
    if tss == 0.0 {
        return (0.0, 0.0);
    }
    let r2 = 1.0 - rss / tss;
    let r2_adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64);
    (r2, r2_adj)
}

struct PivotedQr {
    /// Householder vectors below the diagonal, R on and above; column-major n x p.
    a: Vec<f64>,
    n: usize,
    p: usize,
    rdiag: Vec<f64>,
    /// `perm[i]` is the original column sitting at position i.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn new(x: &DesignMatrix) -> Self {
        let n = x.nrows();
        let p = x.ncols();
        let mut a = x.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut rdiag = vec![0.0; p];
        let mut rank = p;
        let mut r00 = 0.0;

        for k in 0..p {
            // pivot on the largest remaining column norm, first one on ties
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..p {
                let col = &a[j * n + k..(j + 1) * n];
                let norm2: f64 = col.iter().map(|v| v * v).sum();
                if norm2 > best_norm {
                    best_norm = norm2;
                    best = j;
                }
            }
            if best != k {
                for i in 0..n {
                    a.swap(k * n + i, best * n + i);
                }
                perm.swap(k, best);
            }

            let norm = best_norm.sqrt();
            if k == 0 {
                r00 = norm;
            }
            if !(norm > RANK_TOLERANCE * r00) || !norm.is_finite() {
                rank = k;
                break;
            }

            let (head, tail) = a.split_at_mut((k + 1) * n);
            let v = &mut head[k * n + k..(k + 1) * n];
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|e| e * e).sum();
            rdiag[k] = alpha;
            if vnorm2 > 0.0 {
                for j in 0..(p - k - 1) {
                    let col = &mut tail[j * n + k..(j + 1) * n];
                    let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                    let f = 2.0 * dot / vnorm2;
                    for (c, vi) in col.iter_mut().zip(v.iter()) {
                        *c -= f * vi;
                    }
                }
            }
        }
        PivotedQr {
            a,
            n,
            p,
            rdiag,
            perm,
            rank,
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[i]
        } else {
            self.a[j * self.n + i]
        }
    }

    fn householder(&self, k: usize) -> (f64, &[f64]) {
        // R's diagonal lives in rdiag, so storage keeps the reflector's first entry
        let v = &self.a[k * self.n + k..(k + 1) * self.n];
        let v0 = v[0];
        (v0, &v[1..])
    }

    /// Applies `Q^T` to `y`.
    fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for k in 0..self.p {
            let (v0, rest) = self.householder(k);
            let vnorm2 = v0 * v0 + rest.iter().map(|e| e * e).sum::<f64>();
            if vnorm2 == 0.0 {
                continue;
            }
            let seg = &mut out[k..];
            let dot = v0 * seg[0] + rest.iter().zip(&seg[1..]).map(|(a, b)| a * b).sum::<f64>();
            let f = 2.0 * dot / vnorm2;
            seg[0] -= f * v0;
            for (s, vi) in seg[1..].iter_mut().zip(rest) {
                *s -= f * vi;
            }
        }
        out
    }

    /// Inverse of the upper-triangular R.
    fn r_inverse(&self) -> Vec<Vec<f64>> {
        let p = self.p;
        let mut inv = vec![vec![0.0; p]; p];
        for col in 0..p {
            for i in (0..=col).rev() {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for j in (i + 1)..=col {
                    s -= self.r(i, j) * inv[j][col];
                }
                inv[i][col] = s / self.r(i, i);
            }
        }
        inv
    }
}

/// Ordinary least squares fit of `y` on the columns of `x`.
///
/// Requires `n >= p + 2` and a numerically full-rank design.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(KpartError::contract(format!(
            "design has {n} rows but y has {} values",
            y.len()
        )));
    }
    if p == 0 {
        return Err(KpartError::contract("design matrix has no columns"));
    }
    if n < p + 2 {
        return Err(KpartError::InsufficientData { n, p });
    }

    let qr = PivotedQr::new(x);
    if qr.rank < p {
        let roles = qr.perm[qr.rank..]
            .iter()
            .map(|&j| x.roles()[j].to_string())
            .collect();
        return Err(KpartError::SingularDesign { roles });
    }

    // in the pivoted ordering R z = (Q^T y)[..p], back-substitute
    let qty = qr.qt_mul(y);
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in (i + 1)..p {
            s -= qr.r(i, j) * z[j];
        }
        z[i] = s / qr.r(i, i);
    }
    let mut coefficients = vec![0.0; p];
    for (pos, &orig) in qr.perm.iter().enumerate() {
        coefficients[orig] = z[pos];
    }

    let fitted = x.mul_vec(&coefficients)?;
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let tss = total_sum_of_squares(y);
    let (r2, r2_adj) = r_squared(rss, tss, n, p);
    let sigma2_hat = rss / (n - p) as f64;

    // diag((X^T X)^-1) = row norms of R^-1, mapped back through the pivot
    let rinv = qr.r_inverse();
    let mut std_errors = vec![0.0; p];
    for (pos, &orig) in qr.perm.iter().enumerate() {
        let d: f64 = rinv[pos].iter().map(|v| v * v).sum();
        std_errors[orig] = (sigma2_hat * d).sqrt();
    }
    let t_stats = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| b / se)
        .collect();

    Ok(FitResult {
        coefficients,
        fitted,
        rss,
        tss,
        r2,
        r2_adj,
        n,
        p,
        sigma2_hat,
        std_errors,
        t_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ColumnRole;

    fn line_design(x: &[f64]) -> DesignMatrix {
        DesignMatrix::from_columns(vec![
            (ColumnRole::Intercept, vec![1.0; x.len()]),
            (ColumnRole::Linear, x.to_vec()),
        ])
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let fit = fit_ols(&line_design(&x), &x).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-14);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-14);
        assert!(fit.rss < 1e-28);
        assert!((fit.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_point_line_is_insufficient() {
        // n = 3, p = 2 violates n >= p + 2
        let x = [0.0, 1.0, 2.0];
        let err = fit_ols(&line_design(&x), &x).unwrap_err();
        assert!(matches!(err, KpartError::InsufficientData { n: 3, p: 2 }));
    }

    #[test]
    fn constant_response() {
        let x = [0.0, 0.2, 0.5, 0.7, 1.0];
        let y = [3.0; 5];
        let fit = fit_ols(&line_design(&x), &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-14);
        assert!(fit.coefficients[1].abs() < 1e-14);
        assert_eq!(fit.r2, 0.0);
        assert_eq!(fit.r2_adj, 0.0);
    }

    #[test]
    fn singular_design_names_columns() {
        let x = [0.0, 0.25, 0.5, 0.75, 1.0];
        let m = DesignMatrix::from_columns(vec![
            (ColumnRole::Intercept, vec![1.0; 5]),
            (ColumnRole::Linear, x.to_vec()),
            (
                ColumnRole::Knot(0.5),
                x.iter().map(|v| 2.0 * v + 1.0).collect(),
            ),
        ])
        .unwrap();
        let y = [1.0, 2.0, 1.5, 3.0, 2.0];
        match fit_ols(&m, &y).unwrap_err() {
            KpartError::SingularDesign { roles } => assert_eq!(roles.len(), 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bic_examples() {
        let expected = 3.0 * 10f64.ln();
        assert!((bic(10.0, 10, 2) - 6.907755278982137).abs() < 1e-12);
        assert!((bic(10.0, 10, 2) - expected).abs() < 1e-14);
        assert_eq!(bic(25.0, 25, 3), 4.0 * 25f64.ln());
        assert!(bic(1.0, 30, 5) < bic(2.0, 30, 5));
    }

    #[test]
    fn adjusted_r2_formula() {
        let (r2, adj) = r_squared(2.0, 10.0, 21, 5);
        assert!((r2 - 0.8).abs() < 1e-15);
        assert!((adj - (1.0 - 0.2 * 20.0 / 16.0)).abs() < 1e-15);
    }
}
