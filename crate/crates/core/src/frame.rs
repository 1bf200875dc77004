//! The twelve moral frames: six virtue/vice pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoralFrame {
    Care,
    Harm,
    Loyalty,
    Betrayal,
    Authority,
    Subversion,
    Purity,
    Degradation,
    Fairness,
    Injustice,
    Freedom,
    Oppression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Virtue,
    Vice,
}

impl MoralFrame {
    /// Canonical order: pairs in sequence, virtue before vice.
    pub const ALL: [MoralFrame; 12] = [
        MoralFrame::Care,
        MoralFrame::Harm,
        MoralFrame::Loyalty,
        MoralFrame::Betrayal,
        MoralFrame::Authority,
        MoralFrame::Subversion,
        MoralFrame::Purity,
        MoralFrame::Degradation,
        MoralFrame::Fairness,
        MoralFrame::Injustice,
        MoralFrame::Freedom,
        MoralFrame::Oppression,
    ];

    /// Position in [`MoralFrame::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn polarity(self) -> Polarity {
        if self.index() % 2 == 0 {
            Polarity::Virtue
        } else {
            Polarity::Vice
        }
    }

    /// Pair number in `1..=6`.
    pub fn pair_id(self) -> u8 {
        (self.index() / 2 + 1) as u8
    }

    /// The other member of this frame's pair.
    pub fn opposite(self) -> MoralFrame {
        MoralFrame::ALL[self.index() ^ 1]
    }

    pub fn name(self) -> &'static str {
        match self {
            MoralFrame::Care => "Care",
            MoralFrame::Harm => "Harm",
            MoralFrame::Loyalty => "Loyalty",
            MoralFrame::Betrayal => "Betrayal",
            MoralFrame::Authority => "Authority",
            MoralFrame::Subversion => "Subversion",
            MoralFrame::Purity => "Purity",
            MoralFrame::Degradation => "Degradation",
            MoralFrame::Fairness => "Fairness",
            MoralFrame::Injustice => "Injustice",
            MoralFrame::Freedom => "Freedom",
            MoralFrame::Oppression => "Oppression",
        }
    }

    /// Lowercase name, used for feature column names.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase()
    }
}

impl fmt::Display for MoralFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoralFrame {
    type Err = CorpusError;

    /// Case-insensitive match against the canonical names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim();
        MoralFrame::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(needle))
            .ok_or_else(|| CorpusError::UnknownFrame(needle.to_string()))
    }
}

/// Serializable description of a frame, as served to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub name: MoralFrame,
    pub polarity: Polarity,
    pub pair_id: u8,
}

pub fn frame_descriptors() -> Vec<FrameDescriptor> {
    MoralFrame::ALL
        .iter()
        .map(|&f| FrameDescriptor {
            name: f,
            polarity: f.polarity(),
            pair_id: f.pair_id(),
        })
        .collect()
}
