//! Lexicon-based sentiment scoring with negation and booster rules, and the
//! three-way positive/neutral/negative classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::LexiconError;

/// Scores strictly above this are positive; strictly below its negation are negative.
pub const CLASS_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Positive,
    Neutral,
    Negative,
}

pub fn classify(score: f64) -> SentimentClass {
    if score > CLASS_THRESHOLD {
        SentimentClass::Positive
    } else if score < -CLASS_THRESHOLD {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sentiment {
    pub score: f64,
    pub class: SentimentClass,
}

impl Sentiment {
    pub fn from_score(score: f64) -> Sentiment {
        Sentiment {
            score,
            class: classify(score),
        }
    }
}

/// Tunable constants of the scoring rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringRules {
    /// How many preceding tokens are searched for negators and boosters.
    pub window: usize,
    pub negation_factor: f64,
    pub booster_step: f64,
    /// Booster damping by distance 1, 2, 3.
    pub distance_factors: [f64; 3],
    pub normalization_alpha: f64,
}

impl Default for ScoringRules {
    fn default() -> Self {
        ScoringRules {
            window: 3,
            negation_factor: -0.74,
            booster_step: 0.29,
            distance_factors: [1.0, 0.95, 0.9],
            normalization_alpha: 15.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, f64>,
    boosters: BTreeMap<String, f64>,
    negators: BTreeSet<String>,
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon::default()
    }

    /// Adds a valence entry. Tokens must be lowercase and unique; valences lie in `[-4, 4]`.
    pub fn insert(&mut self, token: &str, valence: f64) -> Result<(), String> {
        check_token(token)?;
        if !(-4.0..=4.0).contains(&valence) {
            return Err(format!("valence {valence} for {token:?} outside [-4, 4]"));
        }
        if self.entries.insert(token.to_string(), valence).is_some() {
            return Err(format!("duplicate token {token:?}"));
        }
        Ok(())
    }

    pub fn insert_booster(&mut self, token: &str, increment: f64) -> Result<(), String> {
        check_token(token)?;
        if !increment.is_finite() {
            return Err(format!("booster {token:?} has non-finite increment"));
        }
        if self.boosters.insert(token.to_string(), increment).is_some() {
            return Err(format!("duplicate booster {token:?}"));
        }
        Ok(())
    }

    pub fn insert_negator(&mut self, token: &str) -> Result<(), String> {
        check_token(token)?;
        if !self.negators.insert(token.to_string()) {
            return Err(format!("duplicate negator {token:?}"));
        }
        Ok(())
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn booster(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same lexicon with every valence negated.
    pub fn negated(&self) -> Lexicon {
        Lexicon {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            boosters: self.boosters.clone(),
            negators: self.negators.clone(),
        }
    }

    /// Parses the three text formats: `token<TAB>valence`, `token<TAB>increment`,
    /// and one negator per line. Blank lines and `#` comments are skipped.
    pub fn parse(lexicon_tsv: &str, boosters_tsv: &str, negators_txt: &str) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon::new();
        for (line, token, value) in tsv_pairs("lexicon.tsv", lexicon_tsv)? {
            lex.insert(&token, value).map_err(|message| entry_err("lexicon.tsv", line, message))?;
        }
        for (line, token, value) in tsv_pairs("boosters.tsv", boosters_tsv)? {
            lex.insert_booster(&token, value)
                .map_err(|message| entry_err("boosters.tsv", line, message))?;
        }
        for (i, raw) in negators_txt.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            lex.insert_negator(t).map_err(|message| entry_err("negators.txt", i + 1, message))?;
        }
        Ok(lex)
    }

    /// Loads `lexicon.tsv`, `boosters.tsv` and `negators.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Lexicon, LexiconError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| LexiconError::Io { path, source })
        };
        Lexicon::parse(&read("lexicon.tsv")?, &read("boosters.tsv")?, &read("negators.txt")?)
    }

    /// A small general-purpose English lexicon bundled with the crate.
    pub fn builtin() -> Lexicon {
        Lexicon::parse(
            include_str!("../data/lexicon.tsv"),
            include_str!("../data/boosters.tsv"),
            include_str!("../data/negators.txt"),
        )
        .expect("bundled lexicon is valid")
    }
}

fn check_token(token: &str) -> Result<(), String> {
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return Err(format!("invalid token {token:?}"));
    }
    if token.chars().any(char::is_uppercase) {
        return Err(format!("token {token:?} is not lowercase"));
    }
    Ok(())
}

fn entry_err(source: &str, line: usize, message: String) -> LexiconError {
    LexiconError::Entry {
        source_name: source.to_string(),
        line,
        message,
    }
}

fn tsv_pairs(source: &str, text: &str) -> Result<Vec<(usize, String, f64)>, LexiconError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let token = cols.next().unwrap_or("").trim();
        let value = cols
            .next()
            .ok_or_else(|| entry_err(source, i + 1, "expected token<TAB>value".into()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| entry_err(source, i + 1, format!("bad number {value:?}")))?;
        out.push((i + 1, token.to_string(), value));
    }
    Ok(out)
}

/// Lowercased tokens split on whitespace and punctuation. Apostrophes stay
/// inside words so contractions like "don't" survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Sum of rule-adjusted valences before normalization.
pub fn raw_sum(text: &str, lexicon: &Lexicon, rules: &ScoringRules) -> f64 {
    let tokens = tokenize(text);
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(valence) = lexicon.valence(tok) else {
            continue;
        };
        let sign = if valence > 0.0 {
            1.0
        } else if valence < 0.0 {
            -1.0
        } else {
            0.0
        };
        let mut v = valence;
        let mut negated = false;
        for d in 1..=rules.window.min(i) {
            let prev = &tokens[i - d];
            if let Some(b) = lexicon.booster(prev) {
                let damping = rules.distance_factors.get(d - 1).copied().unwrap_or(0.0);
                v += sign * rules.booster_step * b * damping;
            }
            if lexicon.is_negator(prev) {
                negated = true;
            }
        }
        if negated {
            v *= rules.negation_factor;
        }
        sum += v;
    }
    sum
}

/// Normalized compound score `S / sqrt(S² + alpha)` in `(-1, 1)`.
pub fn score_text_with(text: &str, lexicon: &Lexicon, rules: &ScoringRules) -> f64 {
    let s = raw_sum(text, lexicon, rules);
    if s == 0.0 {
        return 0.0;
    }
    s / (s * s + rules.normalization_alpha).sqrt()
}

pub fn score_text(text: &str, lexicon: &Lexicon) -> f64 {
    score_text_with(text, lexicon, &ScoringRules::default())
}
