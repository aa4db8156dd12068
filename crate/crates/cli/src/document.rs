//! JSON model document written by `kpart fit` and read by `kpart curve`.

use std::path::Path;

use kpart_core::{evaluate_at_locations, ModelSelectionResult, ScaleTransform};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleDoc {
    pub shift: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: String,
    pub series_name: String,
    pub k_requested: usize,
    /// Winning knots in raw predictor units, increasing.
    pub knots_raw_units: Vec<f64>,
    pub selected_years: Vec<i32>,
    /// Coefficients for `[1, x, x^2, x^3, knots...]` with `x` on the scaled axis.
    pub coefficients_scaled: Vec<f64>,
    pub scale: ScaleDoc,
    pub r2: f64,
    pub r2_adj: f64,
    pub bic: f64,
    pub n: usize,
    pub p: usize,
    /// `null` where the t statistic is undefined (exact fits).
    pub t_stats: Vec<Option<f64>>,
}

impl ModelDocument {
    pub fn from_result(res: &ModelSelectionResult) -> Self {
        let fit = res.winner();
        ModelDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            series_name: res.series_name.clone(),
            k_requested: res.k_requested,
            knots_raw_units: res.winning_knots_raw(),
            selected_years: res.selected_years.clone(),
            coefficients_scaled: fit.coefficients.clone(),
            scale: ScaleDoc {
                shift: res.scale.shift(),
                scale: res.scale.scale(),
            },
            r2: fit.r2,
            r2_adj: fit.r2_adj,
            bic: res.winner_bic(),
            n: fit.n,
            p: fit.p,
            t_stats: fit
                .t_stats
                .iter()
                .map(|t| t.is_finite().then_some(*t))
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let doc: ModelDocument = serde_json::from_str(&text)
            .map_err(|e| format!("{} is not a model document: {e}", path.display()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model document serializes");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
                self.schema_version
            ));
        }
        if self.coefficients_scaled.len() != 4 + self.knots_raw_units.len() {
            return Err(format!(
                "{} coefficients for {} knots",
                self.coefficients_scaled.len(),
                self.knots_raw_units.len()
            ));
        }
        self.transform()?;
        Ok(())
    }

    pub fn transform(&self) -> Result<ScaleTransform, String> {
        ScaleTransform::new(self.scale.shift, self.scale.scale).map_err(|e| e.to_string())
    }

    /// Raw predictor range the model was fit on.
    pub fn raw_range(&self) -> (f64, f64) {
        (self.scale.shift, self.scale.shift + self.scale.scale)
    }

    /// Fitted values at raw predictor values.
    pub fn predict_raw(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        let t = self.transform()?;
        let knots = t.forward_all(&self.knots_raw_units);
        evaluate_at_locations(&self.coefficients_scaled, &knots, &t.forward_all(u))
            .map_err(|e| e.to_string())
    }
}
