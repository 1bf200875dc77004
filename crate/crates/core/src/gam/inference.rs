use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::fit::GamModel;
use super::TermKind;
use crate::error::GamError;

pub const PDP_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// One term's centered shape function over its observed range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialDependence {
    pub feature: String,
    pub kind: TermKind,
    /// Ascending, original units.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Values ± 2 standard errors (all-linear models).
    pub se_band: Option<SeBand>,
}

pub fn partial_dependence(model: &GamModel, feature: &str) -> Result<PartialDependence, GamError> {
    let (pos, term) = model
        .terms
        .iter()
        .enumerate()
        .find(|(_, t)| t.feature == feature)
        .ok_or_else(|| GamError::NotAModelTerm(feature.to_string()))?;
    let step = (term.x_max - term.x_min) / (PDP_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PDP_GRID_POINTS)
        .map(|i| if i == PDP_GRID_POINTS - 1 { term.x_max } else { term.x_min + step * i as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| term.contribution(x)).collect();

    let se_band = match (&model.covariance, term.kind) {
        (Some(cov), TermKind::Linear) => {
            let sd = cov[pos + 1][pos + 1].sqrt();
            let (lower, upper) = grid
                .iter()
                .zip(&values)
                .map(|(&x, &v)| {
                    let half = 2.0 * term.scaling.standardize(x).abs() * sd;
                    (v - half, v + half)
                })
                .unzip();
            Some(SeBand { lower, upper })
        }
        _ => None,
    };
    Ok(PartialDependence {
        feature: feature.to_string(),
        kind: term.kind,
        grid,
        values,
        se_band,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermPValue {
    pub feature: String,
    /// Slope and standard error per original unit.
    pub coefficient: f64,
    pub std_error: f64,
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sided t-test of each slope against zero.
pub fn linear_pvalues(model: &GamModel) -> Result<Vec<TermPValue>, GamError> {
    if !model.is_all_linear() {
        return Err(GamError::PValuesUnavailable);
    }
    let p = model.n_coefficients();
    if model.n_rows <= p {
        return Err(GamError::TooFewRows {
            rows: model.n_rows,
            params: p,
        });
    }
    if model.rank_deficient {
        return Err(GamError::RankDeficient);
    }
    let cov = model.covariance.as_ref().ok_or(GamError::RankDeficient)?;
    let df = model.n_rows - p;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df is positive");
    Ok(model
        .terms
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let beta = term.coefficients[0];
            let se = cov[i + 1][i + 1].sqrt();
            let t = beta / se;
            TermPValue {
                feature: term.feature.clone(),
                coefficient: term.slope.unwrap_or(beta / term.scaling.sd),
                std_error: se / term.scaling.sd,
                t,
                df,
                p_value: (2.0 * dist.sf(t.abs())).min(1.0),
            }
        })
        .collect())
}
