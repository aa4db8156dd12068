//! Cubic regression splines with automatic knot selection.
//!
//! Candidate knots are nominated by the min/max K-partition rule: split the
//! year-ordered series into `K` equal blocks and, in each block, take the
//! predictor value of the observation furthest from the block mean. Every
//! subset of the candidates is then fit by least squares on top of a cubic
//! polynomial and the subset with the smallest BIC is kept.

pub mod basis;
pub mod data;
pub mod error;
pub mod knots;
pub mod ols;
pub mod search;

pub use basis::{
    build_design_matrix, evaluate_at_locations, evaluate_spline, spline_derivative,
    truncated_cubic, ColumnRole, DesignMatrix, Knot, KnotSet,
};
pub use data::{
    compute_rate, load_series, make_scale, read_series, write_series, ColumnMap, CrimeSeries,
    LoadReport, Observation, ScaleTransform,
};
pub use error::{KpartError, Result};
pub use knots::{partition_indices, partition_mean, select_knots, Partition, PartitionLayout};
pub use ols::{bic, fit_ols, r_squared, total_sum_of_squares, FitResult};
pub use search::{
    best_subsets, compare_candidates, fit_kpart, fit_kpart_with_limit, pick_winner, selection_bic,
    MaskEvaluation, MaskOutcome, ModelSelectionResult, SubsetSelection, DEFAULT_MAX_K,
};
