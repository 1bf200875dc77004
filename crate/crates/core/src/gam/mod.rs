//! Gaussian additive models: linear terms and penalized cubic B-spline
//! terms, a shared smoothing parameter chosen by generalized
//! cross-validation, partial dependence curves and t-test p-values.
//!
//! Each fitted term is centered over the training rows, so a prediction is
//! the intercept plus the sum of the term contributions.

mod basis;
mod fit;
mod inference;
mod table;

pub use basis::{bspline_basis, difference_matrix, SplineBasis};
pub use fit::{fit, select_lambda, GamModel, GcvCandidate, TermFit};
pub use inference::{linear_pvalues, partial_dependence, PartialDependence, SeBand, TermPValue, PDP_GRID_POINTS};
pub use table::{design_row_table, ColumnScaling, DesignTable};

use serde::{Deserialize, Serialize};

use crate::error::GamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Linear,
    Spline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub feature: String,
    pub kind: TermKind,
}

impl Term {
    pub fn linear(feature: &str) -> Term {
        Term {
            feature: feature.to_string(),
            kind: TermKind::Linear,
        }
    }

    pub fn spline(feature: &str) -> Term {
        Term {
            feature: feature.to_string(),
            kind: TermKind::Spline,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    PerCounty,
    PerTweet,
}

pub const DEFAULT_BASIS_SIZE: usize = 10;
pub const DEFAULT_PENALTY_ORDER: usize = 2;

/// 13 log-spaced values from 1e-3 to 1e3.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

fn default_basis_size() -> usize {
    DEFAULT_BASIS_SIZE
}

fn default_penalty_order() -> usize {
    DEFAULT_PENALTY_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub target: String,
    pub terms: Vec<Term>,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default = "default_basis_size")]
    pub spline_basis_size: usize,
    #[serde(default = "default_penalty_order")]
    pub penalty_order: usize,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
}

impl ModelSpec {
    pub fn new(target: &str, terms: Vec<Term>) -> ModelSpec {
        ModelSpec {
            target: target.to_string(),
            terms,
            granularity: Granularity::default(),
            spline_basis_size: DEFAULT_BASIS_SIZE,
            penalty_order: DEFAULT_PENALTY_ORDER,
            lambda_grid: default_lambda_grid(),
        }
    }

    pub fn is_all_linear(&self) -> bool {
        self.terms.iter().all(|t| t.kind == TermKind::Linear)
    }

    pub fn validate(&self) -> Result<(), GamError> {
        let bad = |m: String| Err(GamError::InvalidSpec(m));
        if self.terms.is_empty() {
            return bad("at least one term is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.terms {
            if !seen.insert(t.feature.as_str()) {
                return bad(format!("feature {:?} appears more than once", t.feature));
            }
            if t.feature == self.target {
                return bad(format!("target {:?} cannot also be a term", t.feature));
            }
        }
        if self.penalty_order == 0 {
            return bad("penalty_order must be at least 1".into());
        }
        if self.spline_basis_size < 4 || self.spline_basis_size < self.penalty_order + 2 {
            return bad(format!(
                "spline_basis_size {} must be at least max(4, penalty_order + 2)",
                self.spline_basis_size
            ));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return bad("lambda_grid must be a non-empty list of finite, non-negative values".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_log_spaced() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[6] - 1.0).abs() < 1e-15);
        assert!((g[12] - 1e3).abs() < 1e-10);
    }

    #[test]
    fn spec_json_defaults() {
        let spec: ModelSpec =
            serde_json::from_str(r#"{"target":"tweet_count","terms":[{"feature":"population","kind":"spline"}]}"#)
                .unwrap();
        assert_eq!(spec.spline_basis_size, 10);
        assert_eq!(spec.penalty_order, 2);
        assert_eq!(spec.granularity, Granularity::PerCounty);
        assert_eq!(spec.lambda_grid.len(), 13);
        spec.validate().unwrap();
    }

    #[test]
    fn spec_validation() {
        let mut s = ModelSpec::new("y", vec![]);
        assert!(s.validate().is_err());
        s.terms = vec![Term::linear("x"), Term::spline("x")];
        assert!(s.validate().is_err());
        s.terms = vec![Term::linear("y")];
        assert!(s.validate().is_err());
        s.terms = vec![Term::spline("x")];
        s.penalty_order = 3;
        s.spline_basis_size = 4;
        assert!(s.validate().is_err());
        s.spline_basis_size = 5;
        s.validate().unwrap();
    }
}
