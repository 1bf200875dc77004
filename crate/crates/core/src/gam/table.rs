use serde::{Deserialize, Serialize};

use super::{Granularity, ModelSpec};
use crate::corpus::Dataset;
use crate::error::GamError;
use crate::features::{CountyFeature, FeatureContext, TweetFeature};

/// Mean and population standard deviation of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub mean: f64,
    pub sd: f64,
}

impl ColumnScaling {
    pub fn of(values: &[f64]) -> ColumnScaling {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        ColumnScaling { mean, sd: var.sqrt() }
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }
}

/// Rows × features in original units, with the target column and the
/// scaling used to z-score each feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTable {
    pub target_name: String,
    pub target: Vec<f64>,
    pub feature_names: Vec<String>,
    /// One vector per feature, aligned with `target`.
    pub columns: Vec<Vec<f64>>,
    pub scaling: Vec<ColumnScaling>,
    /// FIPS codes or tweet ids identifying each row.
    pub row_ids: Vec<String>,
    /// Rows dropped because a required value was absent.
    pub dropped_rows: usize,
}

impl DesignTable {
    /// Builds a table from explicit columns. Every column must match the
    /// target's length and hold only finite values.
    pub fn from_columns(target_name: &str, target: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<DesignTable, GamError> {
        if target.iter().any(|v| !v.is_finite()) {
            return Err(GamError::NonFinite(target_name.to_string()));
        }
        for (name, col) in &columns {
            if col.len() != target.len() {
                return Err(GamError::InvalidSpec(format!(
                    "column {name:?} has {} rows, target has {}",
                    col.len(),
                    target.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(GamError::NonFinite(name.clone()));
            }
        }
        let scaling = columns.iter().map(|(_, c)| ColumnScaling::of(c)).collect();
        let (feature_names, columns) = columns.into_iter().unzip();
        Ok(DesignTable {
            target_name: target_name.to_string(),
            row_ids: (0..target.len()).map(|i| i.to_string()).collect(),
            target,
            feature_names,
            columns,
            scaling,
            dropped_rows: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.feature_names.iter().position(|n| n == name)?;
        Some(&self.columns[i])
    }

    pub fn scaling_of(&self, name: &str) -> Option<ColumnScaling> {
        let i = self.feature_names.iter().position(|n| n == name)?;
        Some(self.scaling[i])
    }

    /// Z-scored copy of a feature column.
    pub fn standardized(&self, name: &str) -> Option<Vec<f64>> {
        let s = self.scaling_of(name)?;
        Some(self.column(name)?.iter().map(|&v| s.standardize(v)).collect())
    }

    /// Same table with rows reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> DesignTable {
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        DesignTable {
            target_name: self.target_name.clone(),
            target: pick(&self.target),
            feature_names: self.feature_names.clone(),
            columns: self.columns.iter().map(|c| pick(c)).collect(),
            scaling: self.scaling.clone(),
            row_ids: order.iter().map(|&i| self.row_ids[i].clone()).collect(),
            dropped_rows: self.dropped_rows,
        }
    }
}

/// Model table for a spec: one row per county or per tweet, holding the
/// target and every term's feature. Rows missing any of them are dropped.
pub fn design_row_table(dataset: &Dataset, spec: &ModelSpec) -> Result<DesignTable, GamError> {
    spec.validate()?;
    let names: Vec<&str> = std::iter::once(spec.target.as_str())
        .chain(spec.terms.iter().map(|t| t.feature.as_str()))
        .collect();
    let ctx = FeatureContext::new(dataset);

    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut dropped = 0usize;
    match spec.granularity {
        Granularity::PerCounty => {
            let feats = names
                .iter()
                .map(|n| n.parse::<CountyFeature>().map_err(|_| GamError::UnknownFeature(n.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            for county in dataset.counties().values() {
                match feats.iter().map(|&f| ctx.county_value(county, f)).collect::<Option<Vec<_>>>() {
                    Some(v) => rows.push((county.fips.clone(), v)),
                    None => dropped += 1,
                }
            }
        }
        Granularity::PerTweet => {
            let feats = names
                .iter()
                .map(|n| n.parse::<TweetFeature>().map_err(|_| GamError::UnknownFeature(n.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            for tweet in dataset.tweets() {
                match feats.iter().map(|&f| ctx.tweet_value(tweet, f)).collect::<Option<Vec<_>>>() {
                    Some(v) => rows.push((tweet.id.clone(), v)),
                    None => dropped += 1,
                }
            }
        }
    }

    let target: Vec<f64> = rows.iter().map(|(_, v)| v[0]).collect();
    let columns = spec
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| (t.feature.clone(), rows.iter().map(|(_, v)| v[j + 1]).collect()))
        .collect();
    let mut table = DesignTable::from_columns(&spec.target, target, columns)?;
    table.row_ids = rows.into_iter().map(|(id, _)| id).collect();
    table.dropped_rows = dropped;
    if is_constant(&table.target) {
        return Err(GamError::DegenerateTarget(spec.target.clone()));
    }
    Ok(table)
}

pub(crate) fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}
