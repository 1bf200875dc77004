//! Tweets, counties and the FIPS join that produces an immutable [`Dataset`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CorpusError;
use crate::frame::MoralFrame;
use crate::geo::{self, Assignment, BBox, Coord, Polygon};
use crate::sentiment::{self, Lexicon, ScoringRules, Sentiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    For,
    Against,
}

impl Stance {
    pub fn index(self) -> usize {
        match self {
            Stance::For => 0,
            Stance::Against => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::For => "for",
            Stance::Against => "against",
        }
    }

    fn parse(s: &str) -> Option<Stance> {
        if s.eq_ignore_ascii_case("for") {
            Some(Stance::For)
        } else if s.eq_ignore_ascii_case("against") {
            Some(Stance::Against)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub retweet_count: u64,
    pub stance: Stance,
    pub vividness: bool,
    pub frames: BTreeSet<MoralFrame>,
    pub bbox: BBox,
    #[serde(default)]
    pub county_fips: Option<String>,
    #[serde(default)]
    pub overlap_fraction: Option<f64>,
    #[serde(default)]
    pub sentiment: Option<Sentiment>,
}

impl Tweet {
    pub fn has_frame(&self, frame: MoralFrame) -> bool {
        self.frames.contains(&frame)
    }

    pub fn sentiment_score(&self) -> Option<f64> {
        self.sentiment.map(|s| s.score)
    }
}

/// Result of `load_tweets`: parsed tweets plus what was dropped or rejected.
#[derive(Debug, Clone, Default)]
pub struct TweetLoad {
    pub tweets: Vec<Tweet>,
    pub rows: usize,
    pub dropped_no_stance: usize,
    pub dropped_no_frames: usize,
    pub rejected: Vec<RowDiagnostic>,
}

impl TweetLoad {
    pub fn dropped(&self) -> usize {
        self.dropped_no_stance + self.dropped_no_frames
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

/// Layout of the tweet CSV.
#[derive(Debug, Clone, Copy)]
pub struct TweetFormat {
    pub delimiter: u8,
    pub frame_separator: char,
}

impl Default for TweetFormat {
    fn default() -> Self {
        TweetFormat {
            delimiter: b',',
            frame_separator: ';',
        }
    }
}

pub const TWEET_COLUMNS: [&str; 11] = [
    "id",
    "timestamp",
    "text",
    "retweet_count",
    "stance",
    "vividness",
    "frames",
    "min_lon",
    "min_lat",
    "max_lon",
    "max_lat",
];

fn open(path: &Path) -> Result<File, CorpusError> {
    File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_tweets(path: &Path, format: TweetFormat) -> Result<TweetLoad, CorpusError> {
    parse_tweets(open(path)?, path, format)
}

enum RowOutcome {
    Tweet(Box<Tweet>),
    NoStance,
    NoFrames,
}

/// Parses tweet rows. A bad header or unreadable input is fatal; a bad row
/// becomes a [`RowDiagnostic`] and parsing continues.
pub fn parse_tweets<R: Read>(reader: R, source: &Path, format: TweetFormat) -> Result<TweetLoad, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| format_err(source, e.to_string()))?.clone();
    let cols = column_positions(&header, &TWEET_COLUMNS, source)?;
    let mut load = TweetLoad::default();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        load.rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if e.is_io_error() {
                    return Err(format_err(source, e.to_string()));
                }
                load.rejected.push(RowDiagnostic {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match parse_tweet_row(&record, &cols, format) {
            Ok(RowOutcome::Tweet(t)) => {
                if !seen.insert(t.id.clone()) {
                    load.rejected.push(RowDiagnostic {
                        line,
                        message: format!("duplicate id {:?}", t.id),
                    });
                } else {
                    load.tweets.push(*t);
                }
            }
            Ok(RowOutcome::NoStance) => load.dropped_no_stance += 1,
            Ok(RowOutcome::NoFrames) => load.dropped_no_frames += 1,
            Err(message) => load.rejected.push(RowDiagnostic { line, message }),
        }
    }
    Ok(load)
}

fn parse_tweet_row(rec: &csv::StringRecord, cols: &[usize], format: TweetFormat) -> Result<RowOutcome, String> {
    if rec.len() < TWEET_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", TWEET_COLUMNS.len(), rec.len()));
    }
    let field = |i: usize| rec.get(cols[i]).unwrap_or("").trim();
    let id = field(0);
    if id.is_empty() {
        return Err("empty id".into());
    }
    let timestamp = DateTime::parse_from_rfc3339(field(1))
        .map_err(|e| format!("bad timestamp {:?}: {e}", field(1)))?
        .with_timezone(&Utc);
    let retweet_count: u64 = field(3)
        .parse()
        .map_err(|_| format!("bad retweet_count {:?}", field(3)))?;
    let stance = match field(4) {
        "" => return Ok(RowOutcome::NoStance),
        s => Stance::parse(s).ok_or_else(|| format!("bad stance {s:?}"))?,
    };
    let vividness = match field(5) {
        "0" => false,
        "1" => true,
        v => return Err(format!("bad vividness {v:?}, expected 0 or 1")),
    };
    let mut frames = BTreeSet::new();
    for name in field(6).split(format.frame_separator).map(str::trim).filter(|s| !s.is_empty()) {
        let f = name.parse::<MoralFrame>().map_err(|_| format!("unknown frame {name:?}"))?;
        frames.insert(f);
    }
    if frames.is_empty() {
        return Ok(RowOutcome::NoFrames);
    }
    let mut corners = [0.0; 4];
    for (k, c) in corners.iter_mut().enumerate() {
        let raw = field(7 + k);
        *c = raw
            .parse()
            .map_err(|_| format!("bad {} {raw:?}", TWEET_COLUMNS[7 + k]))?;
    }
    let bbox = BBox::new(corners[0], corners[1], corners[2], corners[3])
        .ok_or_else(|| "bounding box has min > max or non-finite corner".to_string())?;
    Ok(RowOutcome::Tweet(Box::new(Tweet {
        id: id.to_string(),
        timestamp,
        text: rec.get(cols[2]).unwrap_or("").to_string(),
        retweet_count,
        stance,
        vividness,
        frames,
        bbox,
        county_fips: None,
        overlap_fraction: None,
        sentiment: None,
    })))
}

fn format_err(path: &Path, message: String) -> CorpusError {
    CorpusError::Format {
        path: path.to_path_buf(),
        message,
    }
}

fn column_positions(header: &csv::StringRecord, wanted: &[&str], source: &Path) -> Result<Vec<usize>, CorpusError> {
    wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(w))
                .ok_or_else(|| format_err(source, format!("missing column {w:?}")))
        })
        .collect()
}

/// Stance implied by hashtag counts: more support tags gives `For`, more
/// oppose tags gives `Against`, equal counts give `None`.
pub fn stance_from_hashtags(text: &str, support: &BTreeSet<String>, oppose: &BTreeSet<String>) -> Option<Stance> {
    let (mut pro, mut con) = (0usize, 0usize);
    for tag in hashtags(text) {
        if support.contains(&tag) {
            pro += 1;
        } else if oppose.contains(&tag) {
            con += 1;
        }
    }
    match pro.cmp(&con) {
        std::cmp::Ordering::Greater => Some(Stance::For),
        std::cmp::Ordering::Less => Some(Stance::Against),
        std::cmp::Ordering::Equal => None,
    }
}

/// Lowercased hashtag bodies (without `#`).
pub fn hashtags(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '#' {
            continue;
        }
        let start = i + 1;
        let mut end = start;
        while let Some(&(j, d)) = chars.peek() {
            if d.is_alphanumeric() || d == '_' {
                end = j + d.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        if end > start {
            out.push(text[start..end].to_lowercase());
        }
    }
    out
}

/// County boundary as read from GeoJSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyShape {
    pub fips: String,
    pub name: String,
    pub polygons: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub population: u64,
    pub dem_votes: Option<u64>,
    pub rep_votes: Option<u64>,
    pub median_income: Option<f64>,
    pub mask_usage: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovidPoint {
    pub date: NaiveDate,
    pub cases: u64,
    pub deaths: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct County {
    pub fips: String,
    pub name: String,
    pub polygons: Vec<Polygon>,
    /// Absent when the demographics table had no row for this county.
    pub demographics: Option<Demographics>,
    pub covid_series: Vec<CovidPoint>,
}

impl County {
    pub fn population(&self) -> Option<u64> {
        self.demographics.as_ref().map(|d| d.population)
    }

    /// Democratic minus republican votes; absent when either count is missing.
    pub fn political_leaning(&self) -> Option<i64> {
        let d = self.demographics.as_ref()?;
        Some(d.dem_votes? as i64 - d.rep_votes? as i64)
    }

    /// Latest cumulative point on or before `date`.
    pub fn covid_on(&self, date: NaiveDate) -> Option<&CovidPoint> {
        let idx = self.covid_series.partition_point(|p| p.date <= date);
        idx.checked_sub(1).map(|i| &self.covid_series[i])
    }

    /// Largest cumulative case count among points dated within `[start, end]`.
    pub fn peak_cases_within(&self, start: NaiveDate, end: NaiveDate) -> Option<u64> {
        self.covid_series
            .iter()
            .filter(|p| p.date >= start && p.date <= end)
            .map(|p| p.cases)
            .max()
    }

    pub fn peak_deaths_within(&self, start: NaiveDate, end: NaiveDate) -> Option<u64> {
        self.covid_series
            .iter()
            .filter(|p| p.date >= start && p.date <= end)
            .map(|p| p.deaths)
            .max()
    }
}

/// Normalizes a FIPS code to five digits, restoring leading zeros lost by spreadsheets.
pub fn normalize_fips(raw: &str) -> Option<String> {
    let t = raw.trim();
    if t.is_empty() || t.len() > 5 || !t.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(format!("{t:0>5}"))
}

pub fn load_counties_geojson(path: &Path) -> Result<Vec<CountyShape>, CorpusError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_counties_geojson(&text, path)
}

/// Reads a GeoJSON FeatureCollection of county boundaries. Each feature
/// needs `GEOID` and `NAME` properties and Polygon or MultiPolygon geometry.
/// Rings are rewound so exteriors are counter-clockwise.
pub fn parse_counties_geojson(text: &str, source: &Path) -> Result<Vec<CountyShape>, CorpusError> {
    let root: Value = serde_json::from_str(text).map_err(|e| format_err(source, e.to_string()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(format_err(source, "expected a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err(source, "missing features array".into()))?;
    let mut out = Vec::with_capacity(features.len());
    let mut seen = HashSet::new();
    for (i, feat) in features.iter().enumerate() {
        let props = feat.get("properties").unwrap_or(&Value::Null);
        let geoid = match props.get("GEOID") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(format_err(source, format!("feature {i}: missing GEOID"))),
        };
        let fips = normalize_fips(&geoid)
            .ok_or_else(|| format_err(source, format!("feature {i}: invalid GEOID {geoid:?}")))?;
        if !seen.insert(fips.clone()) {
            return Err(CorpusError::County {
                fips,
                message: "duplicate GEOID".into(),
            });
        }
        let name = props.get("NAME").and_then(Value::as_str).unwrap_or("").to_string();
        let geometry = feat.get("geometry").unwrap_or(&Value::Null);
        let polygons = parse_geometry(geometry).map_err(|message| CorpusError::County {
            fips: fips.clone(),
            message,
        })?;
        out.push(CountyShape { fips, name, polygons });
    }
    out.sort_by(|a, b| a.fips.cmp(&b.fips));
    Ok(out)
}

fn parse_geometry(g: &Value) -> Result<Vec<Polygon>, String> {
    let coords = g.get("coordinates").ok_or("geometry has no coordinates")?;
    let mut polygons = match g.get("type").and_then(Value::as_str) {
        Some("Polygon") => vec![parse_polygon(coords)?],
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or("MultiPolygon coordinates must be an array")?
            .iter()
            .map(parse_polygon)
            .collect::<Result<_, _>>()?,
        other => return Err(format!("unsupported geometry type {other:?}")),
    };
    for p in &mut polygons {
        p.normalize_orientation();
    }
    Ok(polygons)
}

fn parse_polygon(v: &Value) -> Result<Polygon, String> {
    let rings = v.as_array().ok_or("polygon must be an array of rings")?;
    let mut parsed = rings.iter().map(parse_ring);
    let exterior = parsed.next().ok_or("polygon has no rings")??;
    let holes = parsed.collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon { exterior, holes })
}

fn parse_ring(v: &Value) -> Result<Vec<Coord>, String> {
    let pts = v.as_array().ok_or("ring must be an array of positions")?;
    let ring = pts
        .iter()
        .map(|p| {
            let lon = p.get(0).and_then(Value::as_f64);
            let lat = p.get(1).and_then(Value::as_f64);
            match (lon, lat) {
                (Some(lon), Some(lat)) if lon.is_finite() && lat.is_finite() => Ok([lon, lat]),
                _ => Err(format!("bad position {p}")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !geo::ring_is_closed(&ring) {
        return Err("ring must have at least 4 vertices and first == last".into());
    }
    Ok(ring)
}

pub const DEMOGRAPHIC_COLUMNS: [&str; 6] = ["fips", "population", "dem_votes", "rep_votes", "median_income", "mask_usage"];

pub fn load_demographics(path: &Path) -> Result<BTreeMap<String, Demographics>, CorpusError> {
    parse_demographics(open(path)?, path)
}

/// Empty cells in the optional columns become absent values.
pub fn parse_demographics<R: Read>(reader: R, source: &Path) -> Result<BTreeMap<String, Demographics>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| format_err(source, e.to_string()))?.clone();
    let cols = column_positions(&header, &DEMOGRAPHIC_COLUMNS, source)?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| format_err(source, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| CorpusError::Row {
            path: source.to_path_buf(),
            line,
            message,
        };
        let field = |i: usize| record.get(cols[i]).unwrap_or("").trim();
        let fips = normalize_fips(field(0)).ok_or_else(|| row_err(format!("invalid fips {:?}", field(0))))?;
        let population: u64 = field(1)
            .parse()
            .ok()
            .filter(|&p| p > 0)
            .ok_or_else(|| row_err(format!("population must be a positive integer, got {:?}", field(1))))?;
        let opt_u64 = |i: usize| -> Result<Option<u64>, CorpusError> {
            match field(i) {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| row_err(format!("bad {} {s:?}", DEMOGRAPHIC_COLUMNS[i]))),
            }
        };
        let opt_f64 = |i: usize| -> Result<Option<f64>, CorpusError> {
            match field(i) {
                "" => Ok(None),
                s => s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| row_err(format!("bad {} {s:?}", DEMOGRAPHIC_COLUMNS[i]))),
            }
        };
        let mask_usage = opt_f64(5)?;
        if mask_usage.is_some_and(|m| !(0.0..=1.0).contains(&m)) {
            return Err(row_err("mask_usage outside [0, 1]".into()));
        }
        let d = Demographics {
            population,
            dem_votes: opt_u64(2)?,
            rep_votes: opt_u64(3)?,
            median_income: opt_f64(4)?,
            mask_usage,
        };
        if out.insert(fips.clone(), d).is_some() {
            return Err(row_err(format!("duplicate fips {fips}")));
        }
    }
    Ok(out)
}

pub fn load_covid(path: &Path) -> Result<BTreeMap<String, Vec<CovidPoint>>, CorpusError> {
    parse_covid(open(path)?, path)
}

/// Groups cumulative case/death rows by county, sorted by date. Rows may
/// arrive in any order; validation happens in [`build_dataset`].
pub fn parse_covid<R: Read>(reader: R, source: &Path) -> Result<BTreeMap<String, Vec<CovidPoint>>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| format_err(source, e.to_string()))?.clone();
    let cols = column_positions(&header, &["fips", "date", "cases", "deaths"], source)?;
    let mut out: BTreeMap<String, Vec<CovidPoint>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| format_err(source, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| CorpusError::Row {
            path: source.to_path_buf(),
            line,
            message,
        };
        let field = |i: usize| record.get(cols[i]).unwrap_or("").trim();
        let fips = normalize_fips(field(0)).ok_or_else(|| row_err(format!("invalid fips {:?}", field(0))))?;
        let date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
            .map_err(|_| row_err(format!("bad date {:?}", field(1))))?;
        let cases = field(2).parse().map_err(|_| row_err(format!("bad cases {:?}", field(2))))?;
        let deaths = field(3).parse().map_err(|_| row_err(format!("bad deaths {:?}", field(3))))?;
        out.entry(fips).or_default().push(CovidPoint { date, cases, deaths });
    }
    for series in out.values_mut() {
        series.sort_by_key(|p| p.date);
    }
    Ok(out)
}

/// Checks dates strictly increase and cumulative counts never decrease.
pub fn validate_covid_series(fips: &str, series: &[CovidPoint]) -> Result<(), CorpusError> {
    for w in series.windows(2) {
        let err = |message: &str| CorpusError::Covid {
            fips: fips.to_string(),
            date: w[1].date.to_string(),
            message: message.to_string(),
        };
        if w[1].date <= w[0].date {
            return Err(err("dates must be strictly increasing"));
        }
        if w[1].cases < w[0].cases {
            return Err(err("cumulative cases decrease"));
        }
        if w[1].deaths < w[0].deaths {
            return Err(err("cumulative deaths decrease"));
        }
    }
    Ok(())
}

/// Fills each tweet's derived sentiment fields.
pub fn apply_sentiment(tweets: &mut [Tweet], lexicon: &Lexicon, rules: &ScoringRules) {
    for t in tweets {
        t.sentiment = Some(Sentiment::from_score(sentiment::score_text_with(&t.text, lexicon, rules)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

/// What [`build_dataset`] kept and why it excluded the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub tweets_in: usize,
    pub retained: usize,
    pub unassigned: usize,
    pub unknown_fips: Vec<String>,
    pub counties_missing_demographics: Vec<String>,
    pub demographics_without_county: Vec<String>,
    pub covid_without_county: Vec<String>,
    pub self_intersecting_counties: Vec<String>,
}

/// Immutable joined corpus. Every tweet's `county_fips` resolves in `counties`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    topic_label: String,
    time_range: Option<TimeRange>,
    tweets: Vec<Tweet>,
    counties: BTreeMap<String, County>,
}

impl Dataset {
    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn counties(&self) -> &BTreeMap<String, County> {
        &self.counties
    }

    pub fn county(&self, fips: &str) -> Option<&County> {
        self.counties.get(fips)
    }

    pub fn topic_label(&self) -> &str {
        &self.topic_label
    }

    /// `None` for an empty dataset.
    pub fn time_range(&self) -> Option<TimeRange> {
        self.time_range
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.tweets.iter().find(|t| t.id == id)
    }

    pub fn tweets_in_county<'a>(&'a self, fips: &'a str) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.tweets.iter().filter(move |t| t.county_fips.as_deref() == Some(fips))
    }

    /// County of an assigned tweet.
    pub fn county_of(&self, tweet: &Tweet) -> Option<&County> {
        tweet.county_fips.as_deref().and_then(|f| self.counties.get(f))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }

    /// Parses and re-checks the join invariants.
    pub fn from_json(text: &str) -> Result<Dataset, CorpusError> {
        let ds: Dataset = serde_json::from_str(text).map_err(|e| CorpusError::Archive(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for t in &self.tweets {
            match &t.county_fips {
                Some(f) if self.counties.contains_key(f) => {}
                _ => {
                    return Err(CorpusError::Archive(format!(
                        "tweet {} has no county in the dataset",
                        t.id
                    )))
                }
            }
        }
        for c in self.counties.values() {
            validate_covid_series(&c.fips, &c.covid_series)?;
        }
        if self.time_range != compute_time_range(&self.tweets) {
            return Err(CorpusError::Archive("time_range does not match tweets".into()));
        }
        Ok(())
    }
}

fn compute_time_range(tweets: &[Tweet]) -> Option<TimeRange> {
    let start = tweets.iter().map(|t| t.timestamp).min()?;
    let end = tweets.iter().map(|t| t.timestamp).max()?;
    Some(TimeRange { start, end })
}

/// Inputs to [`build_dataset`].
pub struct DatasetParts {
    pub topic_label: String,
    pub tweets: Vec<Tweet>,
    pub counties: Vec<CountyShape>,
    pub demographics: BTreeMap<String, Demographics>,
    pub covid: BTreeMap<String, Vec<CovidPoint>>,
    /// One entry per tweet, in tweet order, as produced by geo assignment.
    pub assignments: Vec<Option<Assignment>>,
}

/// Joins tweets, counties, demographics and case series on FIPS.
///
/// Unassigned tweets and tweets pointing at unknown counties are excluded
/// and reported; counties without demographics are kept with the fields
/// absent. A malformed case series is an error.
pub fn build_dataset(parts: DatasetParts) -> Result<(Dataset, BuildReport), CorpusError> {
    let DatasetParts {
        topic_label,
        tweets,
        counties,
        mut demographics,
        mut covid,
        assignments,
    } = parts;
    assert_eq!(tweets.len(), assignments.len(), "one assignment per tweet");
    let mut report = BuildReport {
        tweets_in: tweets.len(),
        ..Default::default()
    };

    let mut county_map = BTreeMap::new();
    for shape in counties {
        let series = covid.remove(&shape.fips).unwrap_or_default();
        validate_covid_series(&shape.fips, &series)?;
        let demo = demographics.remove(&shape.fips);
        if demo.is_none() {
            report.counties_missing_demographics.push(shape.fips.clone());
        }
        if shape
            .polygons
            .iter()
            .any(|p| geo::ring_self_intersects(&p.exterior) || p.holes.iter().any(|h| geo::ring_self_intersects(h)))
        {
            report.self_intersecting_counties.push(shape.fips.clone());
        }
        county_map.insert(
            shape.fips.clone(),
            County {
                fips: shape.fips,
                name: shape.name,
                polygons: shape.polygons,
                demographics: demo,
                covid_series: series,
            },
        );
    }
    report.demographics_without_county = demographics.into_keys().collect();
    report.covid_without_county = covid.into_keys().collect();

    let mut kept = Vec::with_capacity(tweets.len());
    for (mut t, a) in tweets.into_iter().zip(assignments) {
        match a {
            None => report.unassigned += 1,
            Some(a) if !county_map.contains_key(&a.fips) => {
                report.unknown_fips.push(format!("tweet {}: county {} not in county table", t.id, a.fips));
            }
            Some(a) => {
                t.county_fips = Some(a.fips);
                t.overlap_fraction = Some(a.overlap_fraction);
                kept.push(t);
            }
        }
    }
    report.retained = kept.len();
    let dataset = Dataset {
        topic_label,
        time_range: compute_time_range(&kept),
        tweets: kept,
        counties: county_map,
    };
    Ok((dataset, report))
}

/// Paths of the four ingest inputs.
#[derive(Debug, Clone)]
pub struct InputPaths {
    pub tweets: PathBuf,
    pub counties: PathBuf,
    pub demographics: PathBuf,
    pub covid: PathBuf,
}

/// Row accounting for one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Data rows in the tweet file.
    pub rows_in: usize,
    pub rejected: Vec<RowDiagnostic>,
    pub dropped_no_stance: usize,
    pub dropped_no_frames: usize,
    pub build: BuildReport,
}

impl IngestReport {
    /// Tweets excluded for any reason; `rows_in == retained + dropped`.
    pub fn dropped(&self) -> usize {
        self.rejected.len()
            + self.dropped_no_stance
            + self.dropped_no_frames
            + self.build.unassigned
            + self.build.unknown_fips.len()
    }
}

/// Parse, score, assign and join the four inputs.
pub fn ingest(
    paths: &InputPaths,
    topic_label: &str,
    lexicon: &Lexicon,
    rules: &ScoringRules,
    threshold: f64,
) -> Result<(Dataset, IngestReport), CorpusError> {
    let mut load = load_tweets(&paths.tweets, TweetFormat::default())?;
    let counties = load_counties_geojson(&paths.counties)?;
    let demographics = load_demographics(&paths.demographics)?;
    let covid = load_covid(&paths.covid)?;
    apply_sentiment(&mut load.tweets, lexicon, rules);
    let index = geo::CountyIndex::new(counties.iter().map(|c| (c.fips.as_str(), c.polygons.as_slice())));
    let bboxes: Vec<BBox> = load.tweets.iter().map(|t| t.bbox).collect();
    let assignments = geo::assign_all(&bboxes, &index, threshold);
    let (dataset, build) = build_dataset(DatasetParts {
        topic_label: topic_label.to_string(),
        tweets: load.tweets,
        counties,
        demographics,
        covid,
        assignments,
    })?;
    Ok((
        dataset,
        IngestReport {
            rows_in: load.rows,
            rejected: load.rejected,
            dropped_no_stance: load.dropped_no_stance,
            dropped_no_frames: load.dropped_no_frames,
            build,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    const HEADER: &str = "id,timestamp,text,retweet_count,stance,vividness,frames,min_lon,min_lat,max_lon,max_lat\n";

    fn parse(rows: &str) -> TweetLoad {
        let text = format!("{HEADER}{rows}");
        parse_tweets(text.as_bytes(), Path::new("tweets.csv"), TweetFormat::default()).unwrap()
    }

    #[test]
    fn two_frame_row() {
        let load = parse("t1,2020-04-01T12:00:00Z,stay home,3,for,1,Care;Harm,0,0,1,1\n");
        assert_eq!(load.tweets.len(), 1);
        let t = &load.tweets[0];
        assert_eq!(t.frames.iter().copied().collect::<Vec<_>>(), vec![MoralFrame::Care, MoralFrame::Harm]);
        assert_eq!(t.stance, Stance::For);
        assert!(t.vividness);
        assert_eq!(t.retweet_count, 3);
        assert_eq!(t.timestamp, Utc.with_ymd_and_hms(2020, 4, 1, 12, 0, 0).unwrap());
    }

    #[test]
    fn empty_frames_and_stance_are_dropped() {
        let load = parse(
            "t1,2020-04-01T12:00:00Z,a,0,for,0,,0,0,1,1\n\
             t2,2020-04-01T12:00:00Z,b,0,,0,Care,0,0,1,1\n\
             t3,2020-04-01T12:00:00Z,c,0,against,0,care,0,0,1,1\n",
        );
        assert_eq!(load.dropped_no_frames, 1);
        assert_eq!(load.dropped_no_stance, 1);
        assert_eq!(load.tweets.len(), 1);
        assert_eq!(load.tweets[0].frames.iter().next(), Some(&MoralFrame::Care));
    }

    #[test]
    fn unknown_frame_rejected_with_line() {
        let load = parse(
            "t1,2020-04-01T12:00:00Z,a,0,for,0,Care,0,0,1,1\n\
             t2,2020-04-01T12:00:00Z,b,0,for,0,Liberty,0,0,1,1\n",
        );
        assert_eq!(load.rejected.len(), 1);
        assert_eq!(load.rejected[0].line, 3);
        assert!(load.rejected[0].message.contains("unknown frame"));
    }

    #[test]
    fn malformed_rows_are_counted() {
        let load = parse(
            "t1,yesterday,a,0,for,0,Care,0,0,1,1\n\
             t2,2020-04-01T12:00:00Z,b,-4,for,0,Care,0,0,1,1\n\
             t3,2020-04-01T12:00:00Z,c,0,for,0,Care,1,0,0,1\n\
             t4,2020-04-01T12:00:00Z,d,0,for,2,Care,0,0,1,1\n\
             t5,2020-04-01T12:00:00Z\n\
             t6,2020-04-01T12:00:00Z,e,0,for,0,Care,0,0,1,1\n\
             t6,2020-04-01T12:00:00Z,e,0,for,0,Care,0,0,1,1\n",
        );
        assert_eq!(load.rows, 7);
        assert_eq!(load.tweets.len(), 1);
        assert_eq!(load.rejected.len(), 6);
        assert_eq!(load.rows, load.tweets.len() + load.dropped() + load.rejected.len());
    }

    #[test]
    fn missing_column_is_fatal() {
        let err = parse_tweets("id,timestamp\n".as_bytes(), Path::new("x.csv"), TweetFormat::default()).unwrap_err();
        assert!(err.to_string().contains("missing column"));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = load_tweets(Path::new("/nonexistent/tweets.csv"), TweetFormat::default()).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    fn tags(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hashtag_stance() {
        let support = tags(&["blacklivesmatter"]);
        let oppose = tags(&["alllivesmatter", "bluelivesmatter"]);
        assert_eq!(
            stance_from_hashtags("#blacklivesmatter justice now", &support, &oppose),
            Some(Stance::For)
        );
        assert_eq!(
            stance_from_hashtags("#blacklivesmatter vs #alllivesmatter", &support, &oppose),
            None
        );
        assert_eq!(
            stance_from_hashtags("#AllLivesMatter #bluelivesmatter #blacklivesmatter", &support, &oppose),
            Some(Stance::Against)
        );
        assert_eq!(stance_from_hashtags("no tags", &support, &oppose), None);
    }

    #[test]
    fn hashtag_extraction() {
        assert_eq!(hashtags("#A_b, #c! # #Dé"), vec!["a_b", "c", "dé"]);
    }

    #[test]
    fn fips_normalization() {
        assert_eq!(normalize_fips("1001").as_deref(), Some("01001"));
        assert_eq!(normalize_fips("36061").as_deref(), Some("36061"));
        assert_eq!(normalize_fips("360610"), None);
        assert_eq!(normalize_fips("ab"), None);
    }

    #[test]
    fn geojson_polygon_and_multipolygon() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"GEOID":"01003","NAME":"B"},
           "geometry":{"type":"MultiPolygon","coordinates":[[[[1,0],[2,0],[2,1],[1,1],[1,0]]],[[[5,5],[6,5],[6,6],[5,5]]]]}},
          {"type":"Feature","properties":{"GEOID":1001,"NAME":"A"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[0,1],[1,1],[1,0],[0,0]]]}}
        ]}"#;
        let counties = parse_counties_geojson(text, Path::new("c.geojson")).unwrap();
        assert_eq!(counties[0].fips, "01001");
        assert_eq!(counties[1].polygons.len(), 2);
        // clockwise input is rewound to counter-clockwise
        assert!(geo::ring_signed_area(&counties[0].polygons[0].exterior) > 0.0);
    }

    #[test]
    fn geojson_open_ring_rejected() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"GEOID":"01001","NAME":"A"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]}"#;
        let err = parse_counties_geojson(text, Path::new("c.geojson")).unwrap_err();
        assert!(matches!(err, CorpusError::County { .. }));
    }

    #[test]
    fn demographics_optional_fields() {
        let text = "fips,population,dem_votes,rep_votes,median_income,mask_usage\n1001,500,100,60,52000.5,\n01003,20,,,,0.5\n";
        let d = parse_demographics(text.as_bytes(), Path::new("d.csv")).unwrap();
        assert_eq!(d["01001"].mask_usage, None);
        assert_eq!(d["01001"].dem_votes, Some(100));
        assert_eq!(d["01003"].rep_votes, None);
        let bad = "fips,population,dem_votes,rep_votes,median_income,mask_usage\n01001,0,1,1,1,0.1\n";
        assert!(parse_demographics(bad.as_bytes(), Path::new("d.csv")).is_err());
    }

    fn square(x0: f64, y0: f64) -> Vec<Polygon> {
        vec![Polygon::new(vec![[x0, y0], [x0 + 1.0, y0], [x0 + 1.0, y0 + 1.0], [x0, y0 + 1.0], [x0, y0]])]
    }

    fn tweet(id: &str, day: u32) -> Tweet {
        Tweet {
            id: id.into(),
            timestamp: Utc.with_ymd_and_hms(2020, 4, day, 0, 0, 0).unwrap(),
            text: String::new(),
            retweet_count: 0,
            stance: Stance::For,
            vividness: false,
            frames: [MoralFrame::Care].into(),
            bbox: BBox::point(0.5, 0.5),
            county_fips: None,
            overlap_fraction: None,
            sentiment: None,
        }
    }

    fn parts(tweets: Vec<Tweet>, assignments: Vec<Option<Assignment>>) -> DatasetParts {
        DatasetParts {
            topic_label: "test".into(),
            tweets,
            counties: vec![CountyShape {
                fips: "01001".into(),
                name: "A".into(),
                polygons: square(0.0, 0.0),
            }],
            demographics: BTreeMap::new(),
            covid: BTreeMap::new(),
            assignments,
        }
    }

    fn assigned(fips: &str) -> Option<Assignment> {
        Some(Assignment {
            fips: fips.into(),
            overlap_fraction: 1.0,
        })
    }

    #[test]
    fn unassigned_tweets_excluded() {
        let (ds, report) = build_dataset(parts(
            vec![tweet("a", 1), tweet("b", 3), tweet("c", 2)],
            vec![assigned("01001"), None, assigned("01001")],
        ))
        .unwrap();
        assert_eq!(ds.tweets().len(), 2);
        assert_eq!(report.unassigned, 1);
        assert_eq!(report.counties_missing_demographics, vec!["01001".to_string()]);
        let tr = ds.time_range().unwrap();
        assert_eq!(tr.start, Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap());
        assert_eq!(tr.end, Utc.with_ymd_and_hms(2020, 4, 2, 0, 0, 0).unwrap());
    }

    #[test]
    fn unknown_county_excluded_with_diagnostic() {
        let (ds, report) = build_dataset(parts(vec![tweet("a", 1)], vec![assigned("99999")])).unwrap();
        assert!(ds.tweets().is_empty());
        assert_eq!(report.unknown_fips.len(), 1);
        assert!(report.unknown_fips[0].contains("99999"));
    }

    #[test]
    fn empty_dataset_has_no_time_range() {
        let (ds, _) = build_dataset(parts(vec![], vec![])).unwrap();
        assert!(ds.tweets().is_empty());
        assert_eq!(ds.time_range(), None);
    }

    #[test]
    fn decreasing_cases_name_fips_and_date() {
        let mut p = parts(vec![], vec![]);
        let d = |day| NaiveDate::from_ymd_opt(2020, 4, day).unwrap();
        p.covid.insert(
            "01001".into(),
            vec![
                CovidPoint { date: d(1), cases: 10, deaths: 0 },
                CovidPoint { date: d(2), cases: 7, deaths: 0 },
            ],
        );
        let err = build_dataset(p).unwrap_err().to_string();
        assert!(err.contains("01001") && err.contains("2020-04-02"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let (ds, _) = build_dataset(parts(vec![tweet("a", 1)], vec![assigned("01001")])).unwrap();
        let back = Dataset::from_json(&ds.to_json()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_json(), ds.to_json());
    }

    #[test]
    fn covid_lookup() {
        let d = |day| NaiveDate::from_ymd_opt(2020, 4, day).unwrap();
        let county = County {
            fips: "01001".into(),
            name: "A".into(),
            polygons: square(0.0, 0.0),
            demographics: None,
            covid_series: vec![
                CovidPoint { date: d(2), cases: 1, deaths: 0 },
                CovidPoint { date: d(5), cases: 4, deaths: 1 },
            ],
        };
        assert_eq!(county.covid_on(d(1)), None);
        assert_eq!(county.covid_on(d(4)).unwrap().cases, 1);
        assert_eq!(county.covid_on(d(9)).unwrap().cases, 4);
        assert_eq!(county.peak_cases_within(d(1), d(3)), Some(1));
        assert_eq!(county.peak_cases_within(d(6), d(9)), None);
        assert_eq!(county.political_leaning(), None);
    }
}
