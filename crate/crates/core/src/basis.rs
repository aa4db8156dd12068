//! Truncated power basis for cubic regression splines.
//!
//! The mean function is
//! `b0 + b1 x + b2 x^2 + b3 x^3 + sum_k c_k (x - t_k)_+^3`
//! with `(x - t)_+^3 = 0` for `x <= t`.

use std::fmt;

use crate::error::{KpartError, Result};

/// `(x - t)_+^3`, zero when `x <= t`.
#[inline]
pub fn truncated_cubic(x: f64, t: f64) -> f64 {
    let d = x - t;
    if d <= 0.0 {
        0.0
    } else {
        d * d * d
    }
}

/// A candidate knot and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    /// Location in the (scaled) predictor units the basis is built in.
    pub location: f64,
    /// 1-based partition that nominated the knot.
    pub partition_index: usize,
    /// 1-based index of the source observation.
    pub source_index: usize,
}

/// Candidate knots, strictly increasing in location.
///
/// Every knot lies in `[min(x), max(x))` of the series it was built for; a knot
/// at or past `max(x)` would give an all-zero basis column and is dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnotSet {
    knots: Vec<Knot>,
}

impl KnotSet {
    /// Sorts by location, keeps the lowest partition index among duplicates and
    /// drops knots outside `[min(x), max(x))`.
    pub fn new(mut knots: Vec<Knot>, x: &[f64]) -> Self {
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        knots.retain(|k| k.location >= lo && k.location < hi);
        knots.sort_by(|a, b| {
            a.location
                .total_cmp(&b.location)
                .then(a.partition_index.cmp(&b.partition_index))
        });
        knots.dedup_by(|later, earlier| later.location == earlier.location);
        KnotSet { knots }
    }

    pub fn empty() -> Self {
        KnotSet { knots: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn locations(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.location).collect()
    }

    /// Locations of the knots switched on by `mask`.
    pub fn masked_locations(&self, mask: &[bool]) -> Result<Vec<f64>> {
        check_mask(self, mask)?;
        Ok(self
            .knots
            .iter()
            .zip(mask)
            .filter(|(_, &on)| on)
            .map(|(k, _)| k.location)
            .collect())
    }
}

fn check_mask(knots: &KnotSet, mask: &[bool]) -> Result<()> {
    if mask.len() != knots.len() {
        return Err(KpartError::contract(format!(
            "mask has {} entries for {} knots",
            mask.len(),
            knots.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnRole {
    Intercept,
    Linear,
    Quadratic,
    Cubic,
    Knot(f64),
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRole::Intercept => f.write_str("intercept"),
            ColumnRole::Linear => f.write_str("x"),
            ColumnRole::Quadratic => f.write_str("x^2"),
            ColumnRole::Cubic => f.write_str("x^3"),
            ColumnRole::Knot(t) => write!(f, "knot({t})"),
        }
    }
}

/// Dense n x p design matrix stored column-major, with the role of each column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    values: Vec<f64>,
    roles: Vec<ColumnRole>,
}

impl DesignMatrix {
    /// Builds a matrix from explicit columns.
    pub fn from_columns(columns: Vec<(ColumnRole, Vec<f64>)>) -> Result<Self> {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        if n == 0 {
            return Err(KpartError::contract("design matrix needs at least one row"));
        }
        let mut values = Vec::with_capacity(n * columns.len());
        let mut roles = Vec::with_capacity(columns.len());
        for (role, col) in columns {
            if col.len() != n {
                return Err(KpartError::contract(format!(
                    "column {role} has {} rows, expected {n}",
                    col.len()
                )));
            }
            values.extend_from_slice(&col);
            roles.push(role);
        }
        Ok(DesignMatrix { n, values, roles })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    /// Column-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.get(i, j)).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DesignMatrix {
        let mut values = Vec::with_capacity(self.n * cols.len());
        for &j in cols {
            values.extend_from_slice(self.column(j));
        }
        DesignMatrix {
            n: self.n,
            values,
            roles: cols.iter().map(|&j| self.roles[j]).collect(),
        }
    }

    /// `X * beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.ncols() {
            return Err(KpartError::contract(format!(
                "{} coefficients for {} columns",
                beta.len(),
                self.ncols()
            )));
        }
        let mut out = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.column(j)) {
                *o += b * v;
            }
        }
        Ok(out)
    }
}

/// Columns `[1, x, x^2, x^3, (x - t)_+^3 ...]` for the knots switched on by `mask`,
/// in increasing knot order.
pub fn build_design_matrix(x: &[f64], knots: &KnotSet, mask: &[bool]) -> Result<DesignMatrix> {
    check_mask(knots, mask)?;
    if x.is_empty() {
        return Err(KpartError::contract("design matrix needs at least one row"));
    }
    let n = x.len();
    let active = knots.masked_locations(mask)?;
    let p = 4 + active.len();
    let mut values = Vec::with_capacity(n * p);
    values.extend(std::iter::repeat_n(1.0, n));
    values.extend(x.iter().copied());
    values.extend(x.iter().map(|&v| v * v));
    values.extend(x.iter().map(|&v| v * v * v));
    let mut roles = vec![
        ColumnRole::Intercept,
        ColumnRole::Linear,
        ColumnRole::Quadratic,
        ColumnRole::Cubic,
    ];
    for &t in &active {
        values.extend(x.iter().map(|&v| truncated_cubic(v, t)));
        roles.push(ColumnRole::Knot(t));
    }
    Ok(DesignMatrix { n, values, roles })
}

/// Evaluates the spline with `coefficients` ordered like [`build_design_matrix`].
pub fn evaluate_spline(
    coefficients: &[f64],
    knots: &KnotSet,
    mask: &[bool],
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    spline_derivative(coefficients, knots, mask, x_grid, 0)
}

/// `order`-th derivative (0..=3) of the spline, taking the right-hand limit at knots.
///
/// The third derivative is piecewise constant and jumps by `6 c_k` at knot `t_k`.
pub fn spline_derivative(
    coefficients: &[f64],
    knots: &KnotSet,
    mask: &[bool],
    x_grid: &[f64],
    order: usize,
) -> Result<Vec<f64>> {
    let active = knots.masked_locations(mask)?;
    derivative_at_locations(coefficients, &active, x_grid, order)
}

/// Evaluates the spline for knots given directly as increasing locations, with
/// one trailing coefficient per location.
pub fn evaluate_at_locations(
    coefficients: &[f64],
    locations: &[f64],
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    derivative_at_locations(coefficients, locations, x_grid, 0)
}

fn derivative_at_locations(
    coefficients: &[f64],
    active: &[f64],
    x_grid: &[f64],
    order: usize,
) -> Result<Vec<f64>> {
    if coefficients.len() != 4 + active.len() {
        return Err(KpartError::contract(format!(
            "{} coefficients for {} basis columns",
            coefficients.len(),
            4 + active.len()
        )));
    }
    if order > 3 {
        return Err(KpartError::contract(format!(
            "derivative order {order} not supported"
        )));
    }
    let (poly, tail) = coefficients.split_at(4);
    Ok(x_grid
        .iter()
        .map(|&x| {
            let base = match order {
                0 => poly[0] + x * (poly[1] + x * (poly[2] + x * poly[3])),
                1 => poly[1] + x * (2.0 * poly[2] + 3.0 * x * poly[3]),
                2 => 2.0 * poly[2] + 6.0 * x * poly[3],
                _ => 6.0 * poly[3],
            };
            let knot_part: f64 = active
                .iter()
                .zip(tail)
                .map(|(&t, &c)| {
                    let d = x - t;
                    let term = match order {
                        0 => truncated_cubic(x, t),
                        1 if d > 0.0 => 3.0 * d * d,
                        2 if d > 0.0 => 6.0 * d,
                        3 if d >= 0.0 => 6.0,
                        _ => 0.0,
                    };
                    c * term
                })
                .sum();
            base + knot_part
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knot(location: f64, partition_index: usize, source_index: usize) -> Knot {
        Knot {
            location,
            partition_index,
            source_index,
        }
    }

    #[test]
    fn truncated_cubic_examples() {
        assert_eq!(truncated_cubic(0.5, 1.0), 0.0);
        assert_eq!(truncated_cubic(1.0, 1.0), 0.0);
        assert_eq!(truncated_cubic(2.0, 1.0), 1.0);
    }

    #[test]
    fn knot_set_dedupes_and_drops_max() {
        let x = [0.0, 0.25, 0.5, 1.0];
        let ks = KnotSet::new(
            vec![
                knot(0.5, 3, 3),
                knot(0.25, 2, 2),
                knot(0.5, 1, 9),
                knot(1.0, 4, 4),
                knot(-0.1, 5, 5),
            ],
            &x,
        );
        assert_eq!(ks.locations(), vec![0.25, 0.5]);
        assert_eq!(ks.knots()[1].partition_index, 1);
        assert_eq!(ks.knots()[1].source_index, 9);
    }

    #[test]
    fn design_matrix_direct_evaluation() {
        let x = [0.0, 1.0, 2.0];
        let ks = KnotSet::new(vec![knot(1.0, 1, 2)], &x);
        let m = build_design_matrix(&x, &ks, &[true]).unwrap();
        assert_eq!(m.ncols(), 5);
        assert_eq!(m.row(0), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.row(1), vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(m.row(2), vec![1.0, 2.0, 4.0, 8.0, 1.0]);
        assert_eq!(m.roles()[4], ColumnRole::Knot(1.0));
    }

    #[test]
    fn empty_mask_is_pure_cubic() {
        let x = [0.0, 0.3, 0.6, 1.0];
        let ks = KnotSet::new(vec![knot(0.3, 1, 2), knot(0.6, 2, 3)], &x);
        let m = build_design_matrix(&x, &ks, &[false, false]).unwrap();
        assert_eq!(m.ncols(), 4);
        assert_eq!(
            m.roles(),
            &[
                ColumnRole::Intercept,
                ColumnRole::Linear,
                ColumnRole::Quadratic,
                ColumnRole::Cubic
            ]
        );
    }

    #[test]
    fn knot_columns_hand_evaluated() {
        let x = [0.0, 0.5, 1.0];
        let ks = KnotSet::new(vec![knot(0.25, 1, 1), knot(0.75, 2, 2)], &x);
        let m = build_design_matrix(&x, &ks, &[true, true]).unwrap();
        assert_eq!(m.column(4), &[0.0, 0.015625, 0.421875]);
        assert_eq!(m.column(5), &[0.0, 0.0, 0.015625]);
    }

    #[test]
    fn mask_length_is_checked() {
        let x = [0.0, 0.5, 1.0];
        let ks = KnotSet::new(vec![knot(0.25, 1, 1)], &x);
        assert!(build_design_matrix(&x, &ks, &[]).is_err());
        assert!(evaluate_spline(&[0.0; 4], &ks, &[true], &x).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let grid = [-1.0, 0.0, 0.3, 2.0];
        let ident = evaluate_spline(&[0.0, 1.0, 0.0, 0.0], &KnotSet::empty(), &[], &grid).unwrap();
        assert_eq!(ident, grid.to_vec());

        let x = [-1.0, 0.0, 1.0];
        let ks = KnotSet::new(vec![knot(0.0, 1, 2)], &x);
        let y = evaluate_spline(&[0.0, 0.0, 0.0, 0.0, 1.0], &ks, &[true], &grid).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.3f64.powi(3), 8.0]);
    }

    #[test]
    fn third_derivative_jumps_by_six_c() {
        let x = [0.0, 1.0];
        let ks = KnotSet::new(vec![knot(0.4, 1, 1)], &x);
        let beta = [0.1, -0.2, 0.3, 0.5, 2.5];
        let left = spline_derivative(&beta, &ks, &[true], &[0.39], 3).unwrap()[0];
        let at = spline_derivative(&beta, &ks, &[true], &[0.4], 3).unwrap()[0];
        assert_eq!(left, 3.0);
        assert_eq!(at - left, 15.0);
    }
}
