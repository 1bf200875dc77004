#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use motiv_core::corpus::{ingest, InputPaths, IngestReport};
use motiv_core::sentiment::{Lexicon, ScoringRules};
use motiv_core::{Dataset, MoralFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Fixture {
    pub cols: usize,
    pub rows: usize,
    pub tweets: usize,
    pub days: i64,
    pub seed: u64,
    /// Append the rows below after the regular tweets.
    pub extras: bool,
    /// Side of each square county in degrees.
    pub cell: f64,
    /// Keep only the first `n` grid cells.
    pub county_limit: Option<usize>,
}

impl Default for Fixture {
    fn default() -> Self {
        Fixture {
            cols: 6,
            rows: 5,
            tweets: 200,
            days: 122,
            seed: 7,
            extras: true,
            cell: 1.0,
            county_limit: None,
        }
    }
}

/// Rows appended after the regular tweets, each dropped or kept for a known reason.
pub const NO_STANCE_ROWS: usize = 2;
pub const NO_FRAME_ROWS: usize = 2;
pub const MALFORMED_ROWS: usize = 1;
pub const OUTSIDE_ROWS: usize = 1;
/// Boxes straddling a county border whose larger share is 0.6.
pub const STRADDLE_ROWS: usize = 4;

const WORDS: [&str; 16] = [
    "masks", "good", "bad", "stay", "home", "safe", "hate", "love", "very", "not", "protect", "freedom", "terrible",
    "great", "no", "never",
];

fn text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..12);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

pub fn fips(k: usize) -> String {
    format!("{:05}", 10000 + k)
}

impl Fixture {
    pub fn n_counties(&self) -> usize {
        self.county_limit.unwrap_or(usize::MAX).min(self.cols * self.rows)
    }
}

pub fn total_rows(f: &Fixture) -> usize {
    if !f.extras {
        return f.tweets;
    }
    f.tweets + NO_STANCE_ROWS + NO_FRAME_ROWS + MALFORMED_ROWS + OUTSIDE_ROWS + STRADDLE_ROWS
}

fn write_counties(path: &Path, f: &Fixture) {
    let mut features = Vec::new();
    let s = f.cell;
    for k in 0..f.n_counties() {
        let (x, y) = (-100.0 + (k % f.cols) as f64 * s, 35.0 + (k / f.cols) as f64 * s);
        features.push(json!({
            "type": "Feature",
            "properties": {"GEOID": fips(k), "NAME": format!("County {k}")},
            "geometry": {"type": "Polygon", "coordinates": [[[x, y], [x + s, y], [x + s, y + s], [x, y + s], [x, y]]]},
        }));
    }
    let doc = json!({"type": "FeatureCollection", "features": features});
    std::fs::write(path, serde_json::to_vec(&doc).unwrap()).unwrap();
}

fn write_demographics(path: &Path, f: &Fixture) {
    let mut rng = rng(f.seed ^ 0xdead);
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["fips", "population", "dem_votes", "rep_votes", "median_income", "mask_usage"]).unwrap();
    for k in 0..f.n_counties() {
        w.write_record([
            fips(k),
            rng.random_range(5_000..1_000_000u64).to_string(),
            rng.random_range(1_000..50_000u64).to_string(),
            rng.random_range(1_000..50_000u64).to_string(),
            format!("{:.2}", rng.random_range(30_000.0..90_000.0)),
            format!("{:.3}", rng.random_range(0.3..0.95)),
        ])
        .unwrap();
    }
    w.flush().unwrap();
}

fn write_covid(path: &Path, f: &Fixture) {
    let mut rng = rng(f.seed ^ 0xbeef);
    let start = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap().date_naive();
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["fips", "date", "cases", "deaths"]).unwrap();
    for k in 0..f.n_counties() {
        let (mut cases, mut deaths) = (0u64, 0u64);
        for d in 0..f.days {
            cases += rng.random_range(0..40);
            deaths += rng.random_range(0..2);
            w.write_record([fips(k), (start + Duration::days(d)).to_string(), cases.to_string(), deaths.to_string()])
                .unwrap();
        }
    }
    w.flush().unwrap();
}

fn write_tweets(path: &Path, f: &Fixture) {
    let mut rng = rng(f.seed);
    let start = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap();
    let span = f.days * 86_400 - 1;
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).unwrap();
    w.write_record([
        "id", "timestamp", "text", "retweet_count", "stance", "vividness", "frames", "min_lon", "min_lat", "max_lon",
        "max_lat",
    ])
    .unwrap();
    let row = |w: &mut csv::Writer<std::fs::File>, id: String, rng: &mut ChaCha8Rng, stance: &str, frames: String, bbox: [f64; 4]| {
        // the first two regular tweets pin the ends of the time range
        let secs = match id.as_str() {
            "t0000" => 0,
            "t0001" => span,
            _ => rng.random_range(0..=span),
        };
        let ts = start + Duration::seconds(secs);
        let rt: u64 = if rng.random_bool(0.2) { rng.random_range(0..500) } else { rng.random_range(0..5) };
        let vivid = if rng.random_bool(0.3) { "1" } else { "0" };
        w.write_record([
            id,
            ts.to_rfc3339(),
            text(rng),
            rt.to_string(),
            stance.to_string(),
            vivid.to_string(),
            frames,
            bbox[0].to_string(),
            bbox[1].to_string(),
            bbox[2].to_string(),
            bbox[3].to_string(),
        ])
        .unwrap();
    };
    let frames = |rng: &mut ChaCha8Rng| {
        let mut names = vec![MoralFrame::ALL[rng.random_range(0..12)].name()];
        if rng.random_bool(0.3) {
            let extra = MoralFrame::ALL[rng.random_range(0..12)].name();
            if !names.contains(&extra) {
                names.push(extra);
            }
        }
        names.join(";")
    };
    for i in 0..f.tweets {
        let k = rng.random_range(0..f.n_counties());
        let s = f.cell;
        let x = -100.0 + ((k % f.cols) as f64 + rng.random_range(0.1..0.6)) * s;
        let y = 35.0 + ((k / f.cols) as f64 + rng.random_range(0.1..0.6)) * s;
        let stance = if rng.random_bool(0.55) { "for" } else { "against" };
        let fr = frames(&mut rng);
        row(&mut w, format!("t{i:04}"), &mut rng, stance, fr, [x, y, x + 0.3 * s, y + 0.3 * s]);
    }
    if !f.extras {
        w.flush().unwrap();
        return;
    }
    for i in 0..NO_STANCE_ROWS {
        row(&mut w, format!("s{i}"), &mut rng, "", "Care".into(), [-99.5, 35.5, -99.4, 35.6]);
    }
    for i in 0..NO_FRAME_ROWS {
        row(&mut w, format!("n{i}"), &mut rng, "for", String::new(), [-99.5, 35.5, -99.4, 35.6]);
    }
    for _ in 0..MALFORMED_ROWS {
        w.write_record(["m0", "not-a-time", "x"]).unwrap();
    }
    for i in 0..OUTSIDE_ROWS {
        row(&mut w, format!("o{i}"), &mut rng, "against", "Harm".into(), [-120.0, 10.0, -119.5, 10.5]);
    }
    // 0.6 of each box lies in the eastern county, 0.4 in the western one
    let s = f.cell;
    for i in 0..STRADDLE_ROWS {
        let x = -100.0 + (i as f64 + 0.8) * s;
        row(&mut w, format!("x{i}"), &mut rng, "for", "Fairness".into(), [x, 35.0 + 0.2 * s, x + 0.5 * s, 35.0 + 0.5 * s]);
    }
    w.flush().unwrap();
}

pub struct FixtureFiles {
    pub dir: PathBuf,
    pub paths: InputPaths,
}

pub fn write_fixture(dir: &Path, f: &Fixture) -> FixtureFiles {
    let paths = InputPaths {
        tweets: dir.join("tweets.csv"),
        counties: dir.join("counties.geojson"),
        demographics: dir.join("demographics.csv"),
        covid: dir.join("covid.csv"),
    };
    write_counties(&paths.counties, f);
    write_demographics(&paths.demographics, f);
    write_covid(&paths.covid, f);
    write_tweets(&paths.tweets, f);
    FixtureFiles {
        dir: dir.to_path_buf(),
        paths,
    }
}

pub fn ingest_files(files: &FixtureFiles, threshold: f64) -> (Dataset, IngestReport) {
    ingest(&files.paths, "masks", &Lexicon::builtin(), &ScoringRules::default(), threshold).unwrap()
}

/// Writes the default fixture to a fresh temporary directory and ingests it.
pub fn fixture_dataset() -> Dataset {
    let dir = tempfile::tempdir().unwrap();
    let files = write_fixture(dir.path(), &Fixture::default());
    ingest_files(&files, 0.25).0
}
