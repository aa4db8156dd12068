//! Best-subsets enumeration over candidate knots and the end-to-end K-part fit.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::basis::{build_design_matrix, evaluate_spline, KnotSet};
use crate::data::{make_scale, CrimeSeries, ScaleTransform};
use crate::error::{KpartError, Result};
use crate::knots::select_knots;
use crate::ols::{bic, fit_ols, FitResult};

/// Default cap on `K` (and so on `2^K` subset fits).
pub const DEFAULT_MAX_K: usize = 20;

/// Masks are stored as `u32` bit sets.
pub const HARD_MAX_KNOTS: usize = 30;

/// RSS values below this fraction of `sum(y^2)` are at the rounding level of the
/// solver and are scored as equal, so exact fits are ranked by their penalty.
pub const RSS_RESOLUTION: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub enum MaskOutcome {
    Fitted { rss: f64, bic: f64 },
    Infeasible { reason: String },
}

/// One row of the BIC table.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskEvaluation {
    /// `mask[i]` switches on knot `i` of the candidate set.
    pub mask: Vec<bool>,
    pub p: usize,
    pub outcome: MaskOutcome,
}

impl MaskEvaluation {
    pub fn bic(&self) -> Option<f64> {
        match self.outcome {
            MaskOutcome::Fitted { bic, .. } => Some(bic),
            MaskOutcome::Infeasible { .. } => None,
        }
    }

    pub fn rss(&self) -> Option<f64> {
        match self.outcome {
            MaskOutcome::Fitted { rss, .. } => Some(rss),
            MaskOutcome::Infeasible { .. } => None,
        }
    }
}

/// Result of [`best_subsets`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSelection {
    pub winning_mask: Vec<bool>,
    pub winner: FitResult,
    pub winner_bic: f64,
    /// All `2^m` masks in increasing bit-pattern order (bit i = knot i).
    pub table: Vec<MaskEvaluation>,
}

fn mask_bits(bits: u32, len: usize) -> Vec<bool> {
    (0..len).map(|i| bits & (1 << i) != 0).collect()
}

/// Lower BIC wins, then fewer parameters, then the lexicographically smaller mask.
pub fn compare_candidates(a: (&[bool], usize, f64), b: (&[bool], usize, f64)) -> Ordering {
    a.2.total_cmp(&b.2)
        .then(a.1.cmp(&b.1))
        .then_with(|| a.0.cmp(b.0))
}

/// The minimum under [`compare_candidates`] among fitted masks. The ordering is
/// total over distinct masks, so the result does not depend on iteration order.
pub fn pick_winner<'a>(
    table: impl IntoIterator<Item = &'a MaskEvaluation>,
) -> Option<&'a MaskEvaluation> {
    table
        .into_iter()
        .filter_map(|e| e.bic().map(|b| (e, b)))
        .min_by(|(a, ab), (b, bb)| compare_candidates((&a.mask, a.p, *ab), (&b.mask, b.p, *bb)))
        .map(|(e, _)| e)
}

/// BIC as used for ranking: the RSS is floored at the solver's resolution.
pub fn selection_bic(rss: f64, y_sumsq: f64, n: usize, p: usize) -> f64 {
    let floor = (RSS_RESOLUTION * y_sumsq).max(f64::MIN_POSITIVE);
    bic(rss.max(floor), n, p)
}

/// Fits every subset of the candidate knots on top of the fixed cubic base and
/// keeps the minimum-BIC model. Masks that are singular or leave fewer than two
/// residual degrees of freedom are recorded as infeasible.
pub fn best_subsets(x: &[f64], y: &[f64], knots: &KnotSet) -> Result<SubsetSelection> {
    let m = knots.len();
    if m > HARD_MAX_KNOTS {
        return Err(KpartError::contract(format!(
            "{m} candidate knots exceed the enumeration limit of {HARD_MAX_KNOTS}"
        )));
    }
    if x.len() != y.len() {
        return Err(KpartError::contract(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = y.len();
    let full = build_design_matrix(x, knots, &vec![true; m])?;
    let y_sumsq: f64 = y.iter().map(|v| v * v).sum();

    let fits: Vec<(MaskEvaluation, Option<FitResult>)> = (0..1u32 << m)
        .into_par_iter()
        .map(|bits| {
            let mask = mask_bits(bits, m);
            let cols: Vec<usize> = (0..4)
                .chain((0..m).filter(|&i| mask[i]).map(|i| 4 + i))
                .collect();
            let p = cols.len();
            match fit_ols(&full.select_columns(&cols), y) {
                Ok(fit) => {
                    let score = selection_bic(fit.rss, y_sumsq, n, p);
                    let eval = MaskEvaluation {
                        mask,
                        p,
                        outcome: MaskOutcome::Fitted {
                            rss: fit.rss,
                            bic: score,
                        },
                    };
                    (eval, Some(fit))
                }
                Err(
                    e @ (KpartError::SingularDesign { .. } | KpartError::InsufficientData { .. }),
                ) => {
                    let eval = MaskEvaluation {
                        mask,
                        p,
                        outcome: MaskOutcome::Infeasible {
                            reason: e.to_string(),
                        },
                    };
                    (eval, None)
                }
                Err(e) => panic!("unexpected error from a well-formed design: {e}"),
            }
        })
        .collect();

    let best = pick_winner(fits.iter().map(|(e, _)| e));
    let Some(eval) = best else {
        return Err(KpartError::NoFeasibleModel { masks: fits.len() });
    };
    let index = fits
        .iter()
        .position(|(e, _)| std::ptr::eq(e, eval))
        .expect("winner comes from the table");
    let fit = fits[index].1.as_ref().expect("winner was fitted");
    let winning_mask = eval.mask.clone();
    let winner_bic = eval.bic().unwrap_or(f64::INFINITY);
    let winner = fit.clone();
    let table = fits.into_iter().map(|(e, _)| e).collect();
    Ok(SubsetSelection {
        winning_mask,
        winner,
        winner_bic,
        table,
    })
}

/// Everything produced by [`fit_kpart`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelectionResult {
    pub series_name: String,
    pub k_requested: usize,
    pub scale: ScaleTransform,
    /// Candidate knots in scaled predictor units.
    pub knots: KnotSet,
    pub selection: SubsetSelection,
    /// Years of the source observations of the winning knots.
    pub selected_years: Vec<i32>,
    /// Scaled predictor values the model was fit on.
    pub x_scaled: Vec<f64>,
    pub y: Vec<f64>,
}

impl ModelSelectionResult {
    pub fn winning_mask(&self) -> &[bool] {
        &self.selection.winning_mask
    }

    pub fn winner(&self) -> &FitResult {
        &self.selection.winner
    }

    pub fn winner_bic(&self) -> f64 {
        self.selection.winner_bic
    }

    /// Winning knots in scaled units.
    pub fn winning_knots_scaled(&self) -> Vec<f64> {
        self.knots
            .masked_locations(&self.selection.winning_mask)
            .unwrap_or_default()
    }

    /// Winning knots in raw predictor units.
    pub fn winning_knots_raw(&self) -> Vec<f64> {
        self.winning_knots_scaled()
            .into_iter()
            .map(|t| self.scale.inverse(t))
            .collect()
    }

    /// All candidate knots in raw predictor units.
    pub fn candidate_knots_raw(&self) -> Vec<f64> {
        self.knots
            .locations()
            .into_iter()
            .map(|t| self.scale.inverse(t))
            .collect()
    }

    /// Evaluates the winning spline at raw predictor values.
    pub fn predict_raw(&self, u: &[f64]) -> Result<Vec<f64>> {
        evaluate_spline(
            &self.selection.winner.coefficients,
            &self.knots,
            &self.selection.winning_mask,
            &self.scale.forward_all(u),
        )
    }
}

/// [`fit_kpart_with_limit`] with the default cap on `K`.
pub fn fit_kpart(series: &CrimeSeries, k: usize) -> Result<ModelSelectionResult> {
    fit_kpart_with_limit(series, k, DEFAULT_MAX_K)
}

/// Scales population onto [0, 1], nominates candidate knots with the min/max
/// rule, then runs [`best_subsets`] on the full series (remainder included).
pub fn fit_kpart_with_limit(
    series: &CrimeSeries,
    k: usize,
    max_k: usize,
) -> Result<ModelSelectionResult> {
    let max_k = max_k.min(HARD_MAX_KNOTS);
    if k > max_k {
        return Err(KpartError::contract(format!(
            "K = {k} exceeds the enumeration cap of {max_k}"
        )));
    }
    let raw_x = series.populations();
    let y = series.rates();
    let scale = make_scale(&raw_x)?;
    let x = scale.forward_all(&raw_x);
    let knots = select_knots(&x, &y, k)?;
    let selection = best_subsets(&x, &y, &knots)?;
    let years = series.years();
    let selected_years = knots
        .knots()
        .iter()
        .zip(&selection.winning_mask)
        .filter(|(_, &on)| on)
        .map(|(kn, _)| years[kn.source_index - 1])
        .collect();
    Ok(ModelSelectionResult {
        series_name: series.name().to_string(),
        k_requested: k,
        scale,
        knots,
        selection,
        selected_years,
        x_scaled: x,
        y,
    })
}
