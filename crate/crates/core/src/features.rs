//! Named numeric features of counties and tweets. The same names drive
//! timeline/map coloring and the columns of model tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::analytics::{county_aggregates, CountyAggregate};
use crate::corpus::{County, Dataset, Stance, Tweet};
use crate::error::AnalyticsError;
use crate::frame::MoralFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountyFeature {
    Population,
    DemVotes,
    RepVotes,
    Leaning,
    MedianIncome,
    MaskUsage,
    /// Peak cumulative cases within the corpus time range, per capita.
    CovidCasesPerCapita,
    CovidDeathsPerCapita,
    TweetCount,
    FrameStance(MoralFrame, Stance),
}

impl CountyFeature {
    const SCALARS: [CountyFeature; 9] = [
        CountyFeature::Population,
        CountyFeature::DemVotes,
        CountyFeature::RepVotes,
        CountyFeature::Leaning,
        CountyFeature::MedianIncome,
        CountyFeature::MaskUsage,
        CountyFeature::CovidCasesPerCapita,
        CountyFeature::CovidDeathsPerCapita,
        CountyFeature::TweetCount,
    ];

    pub fn all() -> Vec<CountyFeature> {
        let mut v = CountyFeature::SCALARS.to_vec();
        for f in MoralFrame::ALL {
            v.push(CountyFeature::FrameStance(f, Stance::For));
            v.push(CountyFeature::FrameStance(f, Stance::Against));
        }
        v
    }

    pub fn name(self) -> String {
        match self {
            CountyFeature::Population => "population".into(),
            CountyFeature::DemVotes => "dem_votes".into(),
            CountyFeature::RepVotes => "rep_votes".into(),
            CountyFeature::Leaning => "leaning".into(),
            CountyFeature::MedianIncome => "median_income".into(),
            CountyFeature::MaskUsage => "mask_usage".into(),
            CountyFeature::CovidCasesPerCapita => "covid_cases_per_capita".into(),
            CountyFeature::CovidDeathsPerCapita => "covid_deaths_per_capita".into(),
            CountyFeature::TweetCount => "tweet_count".into(),
            CountyFeature::FrameStance(f, s) => format!("{}_{}", f.slug(), s.as_str()),
        }
    }
}

impl fmt::Display for CountyFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CountyFeature {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CountyFeature::all()
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| AnalyticsError::UnknownFeature {
                name: s.to_string(),
                valid: CountyFeature::all().into_iter().map(CountyFeature::name).collect(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TweetFeature {
    RetweetCount,
    Sentiment,
    Vividness,
    /// 1 for tweets supporting the topic, 0 otherwise.
    StanceFor,
    /// Cumulative cases per capita in the tweet's county on the tweet's date.
    CovidCasesOnDate,
    /// 1 when the tweet expresses the frame.
    Frame(MoralFrame),
    County(CountyFeature),
}

impl TweetFeature {
    pub fn all() -> Vec<TweetFeature> {
        let mut v = vec![
            TweetFeature::RetweetCount,
            TweetFeature::Sentiment,
            TweetFeature::Vividness,
            TweetFeature::StanceFor,
            TweetFeature::CovidCasesOnDate,
        ];
        v.extend(MoralFrame::ALL.iter().map(|&f| TweetFeature::Frame(f)));
        v.extend(CountyFeature::all().into_iter().map(TweetFeature::County));
        v
    }

    pub fn name(self) -> String {
        match self {
            TweetFeature::RetweetCount => "retweet_count".into(),
            TweetFeature::Sentiment => "sentiment".into(),
            TweetFeature::Vividness => "vividness".into(),
            TweetFeature::StanceFor => "stance_for".into(),
            TweetFeature::CovidCasesOnDate => "covid_cases_on_date".into(),
            TweetFeature::Frame(f) => f.slug(),
            TweetFeature::County(c) => c.name(),
        }
    }
}

impl FromStr for TweetFeature {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TweetFeature::all()
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| AnalyticsError::UnknownFeature {
                name: s.to_string(),
                valid: TweetFeature::all().into_iter().map(TweetFeature::name).collect(),
            })
    }
}

/// Precomputed per-county aggregates for feature evaluation.
pub struct FeatureContext<'a> {
    dataset: &'a Dataset,
    aggregates: BTreeMap<String, CountyAggregate>,
}

impl<'a> FeatureContext<'a> {
    pub fn new(dataset: &'a Dataset) -> FeatureContext<'a> {
        FeatureContext {
            dataset,
            aggregates: county_aggregates(dataset),
        }
    }

    pub fn aggregates(&self) -> &BTreeMap<String, CountyAggregate> {
        &self.aggregates
    }

    pub fn aggregate(&self, fips: &str) -> Option<&CountyAggregate> {
        self.aggregates.get(fips)
    }

    /// `None` when the underlying data is missing for this county.
    pub fn county_value(&self, county: &County, feature: CountyFeature) -> Option<f64> {
        let demo = county.demographics.as_ref();
        let per_capita = |v: Option<u64>| -> Option<f64> { Some(v? as f64 / demo?.population as f64) };
        let range = self
            .dataset
            .time_range()
            .map(|r| (r.start.date_naive(), r.end.date_naive()));
        match feature {
            CountyFeature::Population => demo.map(|d| d.population as f64),
            CountyFeature::DemVotes => demo?.dem_votes.map(|v| v as f64),
            CountyFeature::RepVotes => demo?.rep_votes.map(|v| v as f64),
            CountyFeature::Leaning => county.political_leaning().map(|v| v as f64),
            CountyFeature::MedianIncome => demo?.median_income,
            CountyFeature::MaskUsage => demo?.mask_usage,
            CountyFeature::CovidCasesPerCapita => {
                let (start, end) = range?;
                per_capita(county.peak_cases_within(start, end))
            }
            CountyFeature::CovidDeathsPerCapita => {
                let (start, end) = range?;
                per_capita(county.peak_deaths_within(start, end))
            }
            CountyFeature::TweetCount => self.aggregate(&county.fips).map(|a| a.total_tweets as f64),
            CountyFeature::FrameStance(f, s) => self.aggregate(&county.fips).map(|a| a.count(f, s) as f64),
        }
    }

    pub fn tweet_value(&self, tweet: &Tweet, feature: TweetFeature) -> Option<f64> {
        match feature {
            TweetFeature::RetweetCount => Some(tweet.retweet_count as f64),
            TweetFeature::Sentiment => tweet.sentiment_score(),
            TweetFeature::Vividness => Some(f64::from(u8::from(tweet.vividness))),
            TweetFeature::StanceFor => Some(f64::from(u8::from(tweet.stance == Stance::For))),
            TweetFeature::CovidCasesOnDate => {
                let county = self.dataset.county_of(tweet)?;
                let point = county.covid_on(tweet.timestamp.date_naive())?;
                Some(point.cases as f64 / county.population()? as f64)
            }
            TweetFeature::Frame(f) => Some(f64::from(u8::from(tweet.has_frame(f)))),
            TweetFeature::County(c) => self.county_value(self.dataset.county_of(tweet)?, c),
        }
    }
}
