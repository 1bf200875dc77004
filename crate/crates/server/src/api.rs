//! Response payloads. The HTTP handlers and the `export`/`fit` commands
//! both go through these functions, so a CLI file and an API body for the
//! same request are the same bytes.

use std::collections::BTreeMap;

use motiv_core::analytics::{
    frame_summaries, layout_timeline, sort_summaries, FrameSummary, SortDirection, SortKey, TimelineConfig,
};
use motiv_core::corpus::County;
use motiv_core::error::{AnalyticsError, GamError};
use motiv_core::features::{CountyFeature, FeatureContext};
use motiv_core::frame::{frame_descriptors, FrameDescriptor};
use motiv_core::gam::{
    design_row_table, fit, linear_pvalues, partial_dependence, GcvCandidate, ModelSpec, PartialDependence, TermKind,
    TermPValue,
};
use motiv_core::glyph::{layout_map, GlyphScales, LayoutConfig};
use motiv_core::sentiment::Sentiment;
use motiv_core::{Dataset, MoralFrame, Stance};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_TIMELINE_COLOR: &str = "sentiment";
pub const DEFAULT_MAP_COLOR: &str = "leaning";
pub const PVALUE_NOTE: &str = "p-values are only reported for all-linear models; spline terms trade exact inference for flexibility";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    DegenerateModel,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError {
            code: ErrorCode::BadRequest,
            message: message.into(),
            detail: None,
        }
    }

    pub fn not_found(message: impl Into<String>) -> ApiError {
        ApiError {
            code: ErrorCode::NotFound,
            message: message.into(),
            detail: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError {
            code: ErrorCode::Internal,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> ApiError {
        self.detail = Some(detail);
        self
    }

    pub fn status(&self) -> u16 {
        match self.code {
            ErrorCode::BadRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::DegenerateModel => 422,
            ErrorCode::Internal => 500,
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        let detail = match &e {
            AnalyticsError::UnknownFeature { valid, .. } => serde_json::json!({ "valid": valid }),
            AnalyticsError::UnknownSortKey(_) => {
                serde_json::json!({ "valid": SortKey::ALL.iter().map(|k| k.as_str()).collect::<Vec<_>>() })
            }
        };
        ApiError::bad_request(e.to_string()).with_detail(detail)
    }
}

impl From<GamError> for ApiError {
    fn from(e: GamError) -> Self {
        let code = match e {
            GamError::InvalidSpec(_) | GamError::UnknownFeature(_) | GamError::NotAModelTerm(_) => ErrorCode::BadRequest,
            _ => ErrorCode::DegenerateModel,
        };
        ApiError {
            code,
            message: e.to_string(),
            detail: None,
        }
    }
}

/// Compact JSON bytes; the single serialization path for every payload.
pub fn to_body<T: Serialize>(value: &T) -> Result<Vec<u8>, ApiError> {
    serde_json::to_vec(value).map_err(|e| ApiError::internal(format!("serialization failed: {e}")))
}

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Parses an optional frame query value; empty and "all" mean no filter.
pub fn parse_frame(raw: Option<&str>) -> Result<Option<MoralFrame>, ApiError> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) if s.eq_ignore_ascii_case("all") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| {
            ApiError::bad_request(format!("unknown frame {s:?}")).with_detail(serde_json::json!({
                "valid": MoralFrame::ALL.iter().map(|f| f.name()).collect::<Vec<_>>()
            }))
        }),
    }
}

pub fn frames_payload() -> Result<Vec<u8>, ApiError> {
    let frames: Vec<FrameDescriptor> = frame_descriptors();
    to_body(&frames)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    #[serde(flatten)]
    summary: &'a FrameSummary,
    stance_share: f64,
    popularity: u64,
    sentiment_balance: f64,
}

#[derive(Serialize)]
struct SummaryPayload<'a> {
    topic: &'a str,
    sort: Option<&'static str>,
    dir: Option<SortDirection>,
    summaries: Vec<SummaryRow<'a>>,
}

/// Frame summaries, optionally sorted. Without a key the canonical frame
/// order is kept.
pub fn summary_payload(ds: &Dataset, sort: Option<&str>, dir: Option<&str>) -> Result<Vec<u8>, ApiError> {
    let key = sort.filter(|s| !s.is_empty()).map(str::parse::<SortKey>).transpose()?;
    let direction = dir
        .filter(|s| !s.is_empty())
        .map(str::parse::<SortDirection>)
        .transpose()
        .map_err(|m| ApiError::bad_request(m).with_detail(serde_json::json!({ "valid": ["asc", "desc"] })))?;
    let mut summaries = frame_summaries(ds);
    if let Some(k) = key {
        sort_summaries(&mut summaries, k, direction.unwrap_or_default());
    }
    let rows = summaries
        .iter()
        .map(|s| SummaryRow {
            summary: s,
            stance_share: s.stance_share(),
            popularity: s.popularity(),
            sentiment_balance: s.sentiment_balance(),
        })
        .collect();
    to_body(&SummaryPayload {
        topic: ds.topic_label(),
        sort: key.map(SortKey::as_str),
        dir: key.map(|_| direction.unwrap_or_default()),
        summaries: rows,
    })
}

/// Tooltip detail for one tweet.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TweetDetail {
    pub id: String,
    pub timestamp: String,
    pub text: String,
    pub retweet_count: u64,
    pub stance: Stance,
    pub vividness: bool,
    pub frames: Vec<MoralFrame>,
    pub fips: Option<String>,
    pub county_name: Option<String>,
    pub overlap_fraction: Option<f64>,
    pub sentiment: Option<Sentiment>,
}

fn tweet_detail(ds: &Dataset, t: &motiv_core::Tweet) -> TweetDetail {
    TweetDetail {
        id: t.id.clone(),
        timestamp: t.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        text: t.text.clone(),
        retweet_count: t.retweet_count,
        stance: t.stance,
        vividness: t.vividness,
        frames: t.frames.iter().copied().collect(),
        fips: t.county_fips.clone(),
        county_name: ds.county_of(t).map(|c| c.name.clone()),
        overlap_fraction: t.overlap_fraction,
        sentiment: t.sentiment,
    }
}

pub fn tweet_payload(ds: &Dataset, id: &str) -> Result<Vec<u8>, ApiError> {
    let t = ds
        .tweet(id)
        .ok_or_else(|| ApiError::not_found(format!("no tweet with id {id:?}")))?;
    to_body(&tweet_detail(ds, t))
}

#[derive(Serialize)]
struct TimelinePayload<'a> {
    topic: &'a str,
    #[serde(flatten)]
    layout: motiv_core::analytics::TimelineLayout,
    tile_count: usize,
    tweets: BTreeMap<String, TweetDetail>,
}

pub fn timeline_payload(
    ds: &Dataset,
    frame: Option<&str>,
    color: Option<&str>,
    config: &TimelineConfig,
) -> Result<Vec<u8>, ApiError> {
    let frame = parse_frame(frame)?;
    let color = color.filter(|c| !c.is_empty()).unwrap_or(DEFAULT_TIMELINE_COLOR);
    let mut layout = layout_timeline(ds, frame, color, config)?;
    let mut tweets = BTreeMap::new();
    for bin in &mut layout.bins {
        bin.strip_sentiment_mean = bin.strip_sentiment_mean.and_then(finite);
        for tile in bin.tiles_above.iter_mut().chain(bin.tiles_below.iter_mut()) {
            tile.y_offset = sig9(tile.y_offset);
            tile.height = sig9(tile.height);
            tile.color_value = tile.color_value.and_then(finite);
            if let Some(t) = ds.tweet(&tile.tweet_id) {
                tweets.insert(t.id.clone(), tweet_detail(ds, t));
            }
        }
    }
    to_body(&TimelinePayload {
        topic: ds.topic_label(),
        tile_count: layout.tile_count(),
        layout,
        tweets,
    })
}

/// Every county feature by name; absent values are null.
pub fn county_features(ctx: &FeatureContext<'_>, county: &County) -> BTreeMap<String, Option<f64>> {
    CountyFeature::all()
        .into_iter()
        .map(|f| (f.name(), ctx.county_value(county, f).and_then(finite)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CountyTooltip {
    pub name: String,
    pub population: Option<u64>,
    pub leaning: Option<i64>,
    pub tweets: u64,
    pub tweets_for: u64,
    pub tweets_against: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlyphView {
    #[serde(flatten)]
    pub glyph: motiv_core::glyph::Glyph,
    pub county: CountyTooltip,
}

/// Glyph map as served: geometry rounded to 9 significant digits.
#[derive(Debug, Clone, Serialize)]
pub struct MapView {
    pub topic: String,
    pub frame: Option<MoralFrame>,
    pub color_feature: String,
    pub domain: motiv_core::glyph::ScaleDomain,
    pub iterations: usize,
    pub converged: bool,
    pub max_penetration: f64,
    pub total_displacement: f64,
    pub anchor_fallbacks: Vec<String>,
    pub glyph_count: usize,
    pub glyphs: Vec<GlyphView>,
}

pub fn map_payload(
    ds: &Dataset,
    frame: Option<&str>,
    color: Option<&str>,
    scales: &GlyphScales,
    config: &LayoutConfig,
) -> Result<Vec<u8>, ApiError> {
    to_body(&map_view(ds, frame, color, scales, config)?)
}

pub fn map_view(
    ds: &Dataset,
    frame: Option<&str>,
    color: Option<&str>,
    scales: &GlyphScales,
    config: &LayoutConfig,
) -> Result<MapView, ApiError> {
    let frame = parse_frame(frame)?;
    let color = color.filter(|c| !c.is_empty()).unwrap_or(DEFAULT_MAP_COLOR);
    let layout = layout_map(ds, frame, color, scales, config)?;
    let ctx = FeatureContext::new(ds);
    let glyphs: Vec<GlyphView> = layout
        .glyphs
        .into_iter()
        .map(|mut g| {
            let county = ds.county(&g.fips).expect("glyphs come from dataset counties");
            let agg = ctx.aggregate(&g.fips);
            for v in g.anchor.iter_mut().chain(g.position.iter_mut()) {
                *v = sig9(*v);
            }
            g.half_width = sig9(g.half_width);
            g.upper_radius = sig9(g.upper_radius);
            g.lower_radius = sig9(g.lower_radius);
            g.color_value = g.color_value.and_then(finite);
            GlyphView {
                county: CountyTooltip {
                    name: county.name.clone(),
                    population: county.population(),
                    leaning: county.political_leaning(),
                    tweets: agg.map_or(0, |a| a.total_tweets),
                    tweets_for: agg.map_or(0, |a| a.stance_count(frame, Stance::For)),
                    tweets_against: agg.map_or(0, |a| a.stance_count(frame, Stance::Against)),
                },
                glyph: g,
            }
        })
        .collect();
    Ok(MapView {
        topic: ds.topic_label().to_string(),
        frame,
        color_feature: layout.color_feature,
        domain: layout.domain,
        iterations: layout.iterations,
        converged: layout.converged,
        max_penetration: sig9(layout.max_penetration),
        total_displacement: sig9(layout.total_displacement),
        anchor_fallbacks: layout.anchor_fallbacks,
        glyph_count: glyphs.len(),
        glyphs,
    })
}

#[derive(Serialize)]
struct BrushPayload<'a> {
    fips: &'a str,
    name: &'a str,
    tweet_ids: Vec<&'a str>,
    features: BTreeMap<String, Option<f64>>,
}

pub fn brush_payload(ds: &Dataset, fips: &str) -> Result<Vec<u8>, ApiError> {
    let county = ds
        .county(fips)
        .ok_or_else(|| ApiError::not_found(format!("no county with FIPS {fips:?}")))?;
    let ctx = FeatureContext::new(ds);
    to_body(&BrushPayload {
        fips: &county.fips,
        name: &county.name,
        tweet_ids: ds.tweets_in_county(fips).map(|t| t.id.as_str()).collect(),
        features: county_features(&ctx, county),
    })
}

/// Body of a model request: a model spec plus whether p-values are wanted.
#[derive(Debug, Clone, Deserialize)]
pub struct GamRequest {
    #[serde(flatten)]
    pub spec: ModelSpec,
    #[serde(default = "yes")]
    pub p_values: bool,
}

fn yes() -> bool {
    true
}

impl GamRequest {
    pub fn parse(body: &[u8]) -> Result<GamRequest, ApiError> {
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid model spec JSON: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSummary {
    pub feature: String,
    pub kind: TermKind,
    pub coefficients: Vec<f64>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub lambda: Option<f64>,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdPayload {
    pub feature: String,
    pub kind: TermKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub se_lower: Option<Vec<f64>>,
    pub se_upper: Option<Vec<f64>>,
}

impl From<PartialDependence> for PdPayload {
    fn from(pd: PartialDependence) -> Self {
        let (se_lower, se_upper) = match pd.se_band {
            Some(b) => (Some(b.lower), Some(b.upper)),
            None => (None, None),
        };
        PdPayload {
            feature: pd.feature,
            kind: pd.kind,
            grid: pd.grid,
            values: pd.values,
            se_lower,
            se_upper,
        }
    }
}

/// Everything reported about a fitted model.
#[derive(Debug, Clone, Serialize)]
pub struct GamReport {
    pub spec: ModelSpec,
    pub n_rows: usize,
    pub dropped_rows: usize,
    pub intercept: f64,
    pub original_intercept: Option<f64>,
    pub lambda: Option<f64>,
    pub edf: f64,
    pub rss: f64,
    pub gcv_score: Option<f64>,
    pub sigma2: Option<f64>,
    pub jittered: bool,
    pub lambda_search: Vec<GcvCandidate>,
    pub terms: Vec<TermSummary>,
    pub p_values: Option<Vec<TermPValue>>,
    pub p_value_note: Option<String>,
    pub partial_dependence: Vec<PdPayload>,
}

/// Builds the model table for `request`, fits it and collects diagnostics,
/// p-values (all-linear models) and partial dependence for every term.
pub fn gam_report(ds: &Dataset, request: &GamRequest) -> Result<GamReport, GamError> {
    let table = design_row_table(ds, &request.spec)?;
    let model = fit(&table, &request.spec)?;
    let (p_values, p_value_note) = if !request.p_values {
        (None, None)
    } else if model.is_all_linear() {
        (Some(linear_pvalues(&model)?), None)
    } else {
        (None, Some(PVALUE_NOTE.to_string()))
    };
    let partial_dependence = model
        .terms
        .iter()
        .map(|t| partial_dependence(&model, &t.feature).map(PdPayload::from))
        .collect::<Result<Vec<_>, _>>()?;
    let mut lambda_search = model.lambda_search.clone();
    for c in &mut lambda_search {
        c.score = c.score.and_then(finite);
    }
    Ok(GamReport {
        spec: request.spec.clone(),
        n_rows: model.n_rows,
        dropped_rows: table.dropped_rows,
        intercept: model.intercept,
        original_intercept: model.original_intercept,
        lambda: model.lambda,
        edf: model.edf,
        rss: model.rss,
        gcv_score: finite(model.gcv_score),
        sigma2: model.sigma2.and_then(finite),
        jittered: model.jittered,
        lambda_search,
        terms: model
            .terms
            .iter()
            .map(|t| TermSummary {
                feature: t.feature.clone(),
                kind: t.kind,
                coefficients: t.coefficients.clone(),
                slope: t.slope,
                slope_se: t.slope_se.and_then(finite),
                lambda: t.lambda,
                mean: t.scaling.mean,
                sd: t.scaling.sd,
            })
            .collect(),
        p_values,
        p_value_note,
        partial_dependence,
    })
}

pub fn gam_payload(ds: &Dataset, body: &[u8]) -> Result<Vec<u8>, ApiError> {
    let request = GamRequest::parse(body)?;
    let report = gam_report(ds, &request)?;
    to_body(&report)
}
