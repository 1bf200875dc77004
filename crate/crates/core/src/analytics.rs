//! Frame summaries, county aggregates, and the stance-split timeline layout.

use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{County, Dataset, Stance, TimeRange, Tweet};
use crate::error::AnalyticsError;
use crate::features::TweetFeature;
use crate::frame::MoralFrame;
use crate::sentiment::SentimentClass;

pub fn political_leaning(county: &County) -> Option<i64> {
    county.political_leaning()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub positive: u64,
    pub neutral: u64,
    pub negative: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame: MoralFrame,
    pub n_tweets: u64,
    pub n_for: u64,
    pub n_against: u64,
    pub retweets_for: u64,
    pub retweets_against: u64,
    pub vivid_fraction: f64,
    pub sentiment_counts: SentimentCounts,
    /// Share of the frame's tweets (with known county leaning) from counties leaning democratic.
    pub party_fraction_dem: f64,
}

impl FrameSummary {
    fn empty(frame: MoralFrame) -> FrameSummary {
        FrameSummary {
            frame,
            n_tweets: 0,
            n_for: 0,
            n_against: 0,
            retweets_for: 0,
            retweets_against: 0,
            vivid_fraction: 0.0,
            sentiment_counts: SentimentCounts::default(),
            party_fraction_dem: 0.0,
        }
    }

    pub fn stance_share(&self) -> f64 {
        ratio(self.n_for, self.n_tweets)
    }

    pub fn popularity(&self) -> u64 {
        self.retweets_for + self.retweets_against + self.n_tweets
    }

    /// `(positive - negative) / n_tweets`.
    pub fn sentiment_balance(&self) -> f64 {
        if self.n_tweets == 0 {
            return 0.0;
        }
        (self.sentiment_counts.positive as f64 - self.sentiment_counts.negative as f64) / self.n_tweets as f64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Summary over the tweets that express `frame`. A tweet with several
/// frames counts once in each of them.
pub fn frame_summary(dataset: &Dataset, frame: MoralFrame) -> FrameSummary {
    summarize(dataset, frame, dataset.tweets().iter().filter(|t| t.has_frame(frame)))
}

fn summarize<'a>(dataset: &Dataset, frame: MoralFrame, tweets: impl Iterator<Item = &'a Tweet>) -> FrameSummary {
    let mut s = FrameSummary::empty(frame);
    let (mut vivid, mut dem, mut with_leaning) = (0u64, 0u64, 0u64);
    for t in tweets {
        s.n_tweets += 1;
        match t.stance {
            Stance::For => {
                s.n_for += 1;
                s.retweets_for += t.retweet_count;
            }
            Stance::Against => {
                s.n_against += 1;
                s.retweets_against += t.retweet_count;
            }
        }
        vivid += u64::from(t.vividness);
        match t.sentiment.map(|x| x.class) {
            Some(SentimentClass::Positive) => s.sentiment_counts.positive += 1,
            Some(SentimentClass::Neutral) => s.sentiment_counts.neutral += 1,
            Some(SentimentClass::Negative) => s.sentiment_counts.negative += 1,
            None => {}
        }
        if let Some(lean) = dataset.county_of(t).and_then(County::political_leaning) {
            with_leaning += 1;
            dem += u64::from(lean > 0);
        }
    }
    s.vivid_fraction = ratio(vivid, s.n_tweets);
    s.party_fraction_dem = ratio(dem, with_leaning);
    s
}

/// All twelve summaries in canonical frame order.
pub fn frame_summaries(dataset: &Dataset) -> Vec<FrameSummary> {
    MoralFrame::ALL.iter().map(|&f| frame_summary(dataset, f)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    StanceShare,
    Popularity,
    Vividness,
    Sentiment,
    Party,
}

impl SortKey {
    pub const ALL: [SortKey; 5] = [
        SortKey::StanceShare,
        SortKey::Popularity,
        SortKey::Vividness,
        SortKey::Sentiment,
        SortKey::Party,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SortKey::StanceShare => "stance_share",
            SortKey::Popularity => "popularity",
            SortKey::Vividness => "vividness",
            SortKey::Sentiment => "sentiment",
            SortKey::Party => "party",
        }
    }

    fn statistic(self, s: &FrameSummary) -> f64 {
        match self {
            SortKey::StanceShare => s.stance_share(),
            SortKey::Popularity => s.popularity() as f64,
            SortKey::Vividness => s.vivid_fraction,
            SortKey::Sentiment => s.sentiment_balance(),
            SortKey::Party => s.party_fraction_dem,
        }
    }
}

impl FromStr for SortKey {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SortKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AnalyticsError::UnknownSortKey(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortDirection {
    Asc,
    #[default]
    Desc,
}

impl FromStr for SortDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" => Ok(SortDirection::Asc),
            "desc" => Ok(SortDirection::Desc),
            _ => Err(format!("unknown sort direction {s:?}; valid: asc, desc")),
        }
    }
}

/// Stable sort of the summaries by the keyed statistic. Ties keep their input order.
pub fn sort_summaries(summaries: &mut [FrameSummary], key: SortKey, direction: SortDirection) {
    summaries.sort_by(|a, b| {
        let ord = key.statistic(a).total_cmp(&key.statistic(b));
        match direction {
            SortDirection::Asc => ord,
            SortDirection::Desc => ord.reverse(),
        }
    });
}

pub fn sort_frames(summaries: &[FrameSummary], key: SortKey, direction: SortDirection) -> Vec<MoralFrame> {
    let mut v = summaries.to_vec();
    sort_summaries(&mut v, key, direction);
    v.into_iter().map(|s| s.frame).collect()
}

/// Per-county tweet counts for every frame and stance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyAggregate {
    pub fips: String,
    /// `counts[frame.index()][stance.index()]`.
    pub counts: [[u64; 2]; 12],
    pub total_tweets: u64,
    pub total_for: u64,
    pub total_against: u64,
    pub leaning: Option<i64>,
}

impl CountyAggregate {
    pub fn new(county: &County) -> CountyAggregate {
        CountyAggregate {
            fips: county.fips.clone(),
            counts: [[0; 2]; 12],
            total_tweets: 0,
            total_for: 0,
            total_against: 0,
            leaning: county.political_leaning(),
        }
    }

    pub fn count(&self, frame: MoralFrame, stance: Stance) -> u64 {
        self.counts[frame.index()][stance.index()]
    }

    /// Tweets of one stance, restricted to `frame` when given.
    pub fn stance_count(&self, frame: Option<MoralFrame>, stance: Stance) -> u64 {
        match (frame, stance) {
            (Some(f), s) => self.count(f, s),
            (None, Stance::For) => self.total_for,
            (None, Stance::Against) => self.total_against,
        }
    }

    fn add(&mut self, t: &Tweet) {
        self.total_tweets += 1;
        match t.stance {
            Stance::For => self.total_for += 1,
            Stance::Against => self.total_against += 1,
        }
        for f in &t.frames {
            self.counts[f.index()][t.stance.index()] += 1;
        }
    }
}

/// Aggregates for every county in the dataset, including those without tweets.
pub fn county_aggregates(dataset: &Dataset) -> BTreeMap<String, CountyAggregate> {
    let mut out: BTreeMap<String, CountyAggregate> = dataset
        .counties()
        .values()
        .map(|c| (c.fips.clone(), CountyAggregate::new(c)))
        .collect();
    for t in dataset.tweets() {
        if let Some(agg) = t.county_fips.as_ref().and_then(|f| out.get_mut(f)) {
            agg.add(t);
        }
    }
    out
}

/// Candidate bin widths in days, smallest first.
pub const BIN_WIDTHS_DAYS: [i64; 5] = [1, 3, 7, 14, 30];
pub const MAX_BINS: i64 = 60;

/// Midnight UTC of the range's first day.
pub fn bin_anchor(range: &TimeRange) -> DateTime<Utc> {
    range.start.date_naive().and_time(NaiveTime::MIN).and_utc()
}

/// Calendar days touched by the range, counted from the anchor.
fn span_days(range: &TimeRange) -> i64 {
    (range.end.date_naive() - range.start.date_naive()).num_days() + 1
}

/// Smallest candidate width giving at most 60 bins; 30 days if none does.
pub fn choose_bin_width(range: &TimeRange) -> Duration {
    let days = span_days(range);
    let w = BIN_WIDTHS_DAYS
        .into_iter()
        .find(|w| (days + w - 1) / w <= MAX_BINS)
        .unwrap_or(BIN_WIDTHS_DAYS[BIN_WIDTHS_DAYS.len() - 1]);
    Duration::days(w)
}

pub fn bin_count(range: &TimeRange, width: Duration) -> usize {
    let w = width.num_days();
    ((span_days(range) + w - 1) / w) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightScale {
    Log2,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineConfig {
    pub h_min: f64,
    pub h_unit: f64,
    pub height_scale: HeightScale,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        TimelineConfig {
            h_min: 2.0,
            h_unit: 2.0,
            height_scale: HeightScale::Log2,
        }
    }
}

impl TimelineConfig {
    pub fn tile_height(&self, retweets: u64) -> f64 {
        let r = retweets as f64;
        match self.height_scale {
            HeightScale::Log2 => self.h_min + self.h_unit * (1.0 + r).log2(),
            HeightScale::Linear => self.h_min + self.h_unit * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub tweet_id: String,
    pub fips: Option<String>,
    pub retweet_count: u64,
    /// Distance of the tile's near edge from the center axis.
    pub y_offset: f64,
    pub height: f64,
    pub color_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineBin {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// Tweets for the topic, nearest the axis first.
    pub tiles_above: Vec<Tile>,
    /// Tweets against the topic, nearest the axis first.
    pub tiles_below: Vec<Tile>,
    /// Mean sentiment score over the bin's tweets; absent for empty bins.
    pub strip_sentiment_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineLayout {
    pub frame: Option<MoralFrame>,
    pub color_feature: String,
    pub bin_width_days: i64,
    pub bins: Vec<TimelineBin>,
}

impl TimelineLayout {
    pub fn tile_count(&self) -> usize {
        self.bins.iter().map(|b| b.tiles_above.len() + b.tiles_below.len()).sum()
    }
}

/// Lays out tweets as stacked tiles: bins along time, supporters above
/// the axis and opponents below, most-retweeted nearest the axis.
pub fn layout_timeline(
    dataset: &Dataset,
    frame: Option<MoralFrame>,
    color_feature: &str,
    config: &TimelineConfig,
) -> Result<TimelineLayout, AnalyticsError> {
    let feature: TweetFeature = color_feature.parse()?;
    let Some(range) = dataset.time_range() else {
        return Ok(TimelineLayout {
            frame,
            color_feature: feature.name(),
            bin_width_days: 1,
            bins: Vec::new(),
        });
    };
    let width = choose_bin_width(&range);
    let anchor = bin_anchor(&range);
    let n_bins = bin_count(&range, width);
    let ctx = crate::features::FeatureContext::new(dataset);

    let mut buckets: Vec<[Vec<&Tweet>; 2]> = (0..n_bins).map(|_| [Vec::new(), Vec::new()]).collect();
    for t in dataset.tweets() {
        if frame.is_some_and(|f| !t.has_frame(f)) {
            continue;
        }
        let k = ((t.timestamp - anchor).num_seconds() / width.num_seconds()) as usize;
        buckets[k][t.stance.index()].push(t);
    }

    let bins = buckets
        .into_iter()
        .enumerate()
        .map(|(k, mut sides)| {
            let stack = |side: &mut Vec<&Tweet>| -> Vec<Tile> {
                side.sort_by(|a, b| b.retweet_count.cmp(&a.retweet_count).then_with(|| a.id.cmp(&b.id)));
                let mut offset = 0.0;
                side.iter()
                    .map(|t| {
                        let height = config.tile_height(t.retweet_count);
                        let tile = Tile {
                            tweet_id: t.id.clone(),
                            fips: t.county_fips.clone(),
                            retweet_count: t.retweet_count,
                            y_offset: offset,
                            height,
                            color_value: ctx.tweet_value(t, feature),
                        };
                        offset += height;
                        tile
                    })
                    .collect()
            };
            let tiles_above = stack(&mut sides[Stance::For.index()]);
            let tiles_below = stack(&mut sides[Stance::Against.index()]);
            // sides are now sorted, so the sum does not depend on input order
            let scores: Vec<f64> = sides.iter().flatten().filter_map(|t| t.sentiment_score()).collect();
            let strip_sentiment_mean = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
            let start = anchor + width * k as i32;
            TimelineBin {
                start,
                end: start + width,
                tiles_above,
                tiles_below,
                strip_sentiment_mean,
            }
        })
        .collect();

    Ok(TimelineLayout {
        frame,
        color_feature: feature.name(),
        bin_width_days: width.num_days(),
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn range(days: i64) -> TimeRange {
        let start = Utc.with_ymd_and_hms(2020, 3, 1, 8, 0, 0).unwrap();
        TimeRange {
            start,
            end: start + Duration::days(days - 1),
        }
    }

    #[test]
    fn bin_width_choices() {
        assert_eq!(choose_bin_width(&range(30)), Duration::days(1));
        assert_eq!(bin_count(&range(30), Duration::days(1)), 30);
        assert_eq!(choose_bin_width(&range(60)), Duration::days(1));
        assert_eq!(choose_bin_width(&range(61)), Duration::days(3));
        // Mar 1 through Jun 30
        let r = TimeRange {
            start: Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap(),
            end: Utc.with_ymd_and_hms(2020, 6, 30, 23, 0, 0).unwrap(),
        };
        assert_eq!(span_days(&r), 122);
        assert_eq!(choose_bin_width(&r), Duration::days(3));
        assert_eq!(bin_count(&r, Duration::days(3)), 41);
        // three years: 1096 days needs 30-day bins (14d would give 79)
        assert_eq!(choose_bin_width(&range(1096)), Duration::days(30));
        assert_eq!(bin_count(&range(1096), Duration::days(30)), 37);
    }

    #[test]
    fn single_instant_gets_one_day_bin() {
        let t = Utc.with_ymd_and_hms(2020, 5, 4, 13, 0, 0).unwrap();
        let r = TimeRange { start: t, end: t };
        assert_eq!(choose_bin_width(&r), Duration::days(1));
        assert_eq!(bin_count(&r, Duration::days(1)), 1);
        assert_eq!(bin_anchor(&r), Utc.with_ymd_and_hms(2020, 5, 4, 0, 0, 0).unwrap());
    }

    #[test]
    fn tile_heights() {
        let c = TimelineConfig::default();
        assert_eq!(c.tile_height(0), c.h_min);
        assert_eq!(c.tile_height(1), c.h_min + c.h_unit);
        assert_eq!(c.tile_height(3), c.h_min + 2.0 * c.h_unit);
        let lin = TimelineConfig {
            height_scale: HeightScale::Linear,
            ..c
        };
        assert_eq!(lin.tile_height(5), c.h_min + 5.0 * c.h_unit);
    }

    #[test]
    fn sort_key_parsing() {
        assert_eq!("popularity".parse::<SortKey>().unwrap(), SortKey::Popularity);
        let err = "fame".parse::<SortKey>().unwrap_err();
        assert!(err.to_string().contains("stance_share"));
    }
}
