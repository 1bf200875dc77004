#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use motiv_core::corpus::{build_dataset, CountyShape, CovidPoint, DatasetParts, Demographics};
use motiv_core::geo::{assign_all, BBox, CountyIndex, Polygon};
use motiv_core::sentiment::{score_text, Lexicon, Sentiment};
use motiv_core::{Dataset, MoralFrame, Stance, Tweet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn square(x0: f64, y0: f64, size: f64) -> Polygon {
    Polygon::new(vec![
        [x0, y0],
        [x0 + size, y0],
        [x0 + size, y0 + size],
        [x0, y0 + size],
        [x0, y0],
    ])
}

/// `cols × rows` grid of unit-degree square counties starting at
/// (-100°, 35°), FIPS "10000" + index.
pub fn grid_counties(cols: usize, rows: usize) -> Vec<CountyShape> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            out.push(CountyShape {
                fips: format!("{:05}", 10000 + k),
                name: format!("County {k}"),
                polygons: vec![square(-100.0 + c as f64, 35.0 + r as f64, 1.0)],
            });
        }
    }
    out
}

const WORDS: [&str; 14] = [
    "masks", "good", "bad", "stay", "home", "safe", "hate", "love", "very", "not", "protect", "freedom", "terrible",
    "great",
];

pub fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..12);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

pub struct SynthConfig {
    pub cols: usize,
    pub rows: usize,
    pub tweets: usize,
    pub days: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            cols: 6,
            rows: 5,
            tweets: 200,
            days: 122,
            seed: 7,
        }
    }
}

pub fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap()
}

/// Raw tweets whose bounding boxes sit well inside a random grid county.
pub fn synth_tweets(cfg: &SynthConfig) -> Vec<Tweet> {
    let mut rng = rng(cfg.seed);
    let span = cfg.days * 86_400 - 1;
    (0..cfg.tweets)
        .map(|i| {
            let c = rng.random_range(0..cfg.cols) as f64;
            let r = rng.random_range(0..cfg.rows) as f64;
            let x = -100.0 + c + rng.random_range(0.1..0.6);
            let y = 35.0 + r + rng.random_range(0.1..0.6);
            let mut frames = BTreeSet::new();
            frames.insert(MoralFrame::ALL[rng.random_range(0..12)]);
            if rng.random_bool(0.3) {
                frames.insert(MoralFrame::ALL[rng.random_range(0..12)]);
            }
            let text = random_text(&mut rng);
            Tweet {
                id: format!("t{i:04}"),
                timestamp: start_time() + Duration::seconds(rng.random_range(0..=span)),
                sentiment: Some(Sentiment::from_score(score_text(&text, &Lexicon::builtin()))),
                text,
                retweet_count: if rng.random_bool(0.2) { rng.random_range(0..500) } else { rng.random_range(0..5) },
                stance: if rng.random_bool(0.55) { Stance::For } else { Stance::Against },
                vividness: rng.random_bool(0.3),
                frames,
                bbox: BBox::new(x, y, x + 0.3, y + 0.3).unwrap(),
                county_fips: None,
                overlap_fraction: None,
            }
        })
        .collect()
}

pub fn synth_demographics(counties: &[CountyShape], seed: u64) -> BTreeMap<String, Demographics> {
    let mut rng = rng(seed ^ 0xdead);
    counties
        .iter()
        .map(|c| {
            let dem = rng.random_range(1_000..50_000u64);
            let rep = rng.random_range(1_000..50_000u64);
            (
                c.fips.clone(),
                Demographics {
                    population: rng.random_range(5_000..1_000_000),
                    dem_votes: Some(dem),
                    rep_votes: Some(rep),
                    median_income: Some(rng.random_range(30_000.0..90_000.0)),
                    mask_usage: Some(rng.random_range(0.3..0.95)),
                },
            )
        })
        .collect()
}

pub fn synth_covid(counties: &[CountyShape], days: i64, seed: u64) -> BTreeMap<String, Vec<CovidPoint>> {
    let mut rng = rng(seed ^ 0xbeef);
    counties
        .iter()
        .map(|c| {
            let (mut cases, mut deaths) = (0u64, 0u64);
            let series = (0..days)
                .map(|d| {
                    cases += rng.random_range(0..40);
                    deaths += rng.random_range(0..2);
                    CovidPoint {
                        date: (start_time() + Duration::days(d)).date_naive(),
                        cases,
                        deaths,
                    }
                })
                .collect();
            (c.fips.clone(), series)
        })
        .collect()
}

pub fn dataset_from_tweets(counties: Vec<CountyShape>, tweets: Vec<Tweet>, seed: u64, days: i64) -> Dataset {
    let demographics = synth_demographics(&counties, seed);
    let covid = synth_covid(&counties, days, seed);
    let assignments = {
        let index = CountyIndex::new(counties.iter().map(|c| (c.fips.as_str(), c.polygons.as_slice())));
        let boxes: Vec<BBox> = tweets.iter().map(|t| t.bbox).collect();
        assign_all(&boxes, &index, 0.25)
    };
    build_dataset(DatasetParts {
        topic_label: "masks".into(),
        tweets,
        counties,
        demographics,
        covid,
        assignments,
    })
    .unwrap()
    .0
}

pub fn synth_dataset(cfg: &SynthConfig) -> Dataset {
    dataset_from_tweets(grid_counties(cfg.cols, cfg.rows), synth_tweets(cfg), cfg.seed, cfg.days)
}
