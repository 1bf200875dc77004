use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("unknown frame {0:?}")]
    UnknownFrame(String),
    #[error("county {fips}: {message}")]
    County { fips: String, message: String },
    #[error("covid series for {fips} at {date}: {message}")]
    Covid {
        fips: String,
        date: String,
        message: String,
    },
    #[error("dataset archive: {0}")]
    Archive(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside the Mercator range (|lat| < 85.06)")]
    LatitudeOutOfRange(f64),
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Entry {
        source_name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("unknown color feature {name:?}; valid features: {}", valid.join(", "))]
    UnknownFeature { name: String, valid: Vec<String> },
    #[error("unknown sort key {0:?}; valid keys: stance_share, popularity, vividness, sentiment, party")]
    UnknownSortKey(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GamError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("degenerate target: {0:?} is constant across rows")]
    DegenerateTarget(String),
    #[error("zero-width domain: all values are equal")]
    ZeroWidthDomain,
    #[error("column {0:?} contains NaN or infinite values")]
    NonFinite(String),
    #[error("rank-deficient design")]
    RankDeficient,
    #[error("not enough rows: {rows} rows for {params} free coefficients")]
    TooFewRows { rows: usize, params: usize },
    #[error("no admissible smoothing parameter: every candidate has edf >= n")]
    NoAdmissibleLambda,
    #[error("p-values are only reported for all-linear models")]
    PValuesUnavailable,
    #[error("feature {0:?} is not a term of this model")]
    NotAModelTerm(String),
}
