//! Corpus record types and their file formats.
//!
//! Every corpus file is JSON Lines: one record per line, UTF-8, LF endings.
//! Field order on disk follows the struct declaration order and unknown
//! fields are rejected on load.

mod jsonl;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jsonl::{load_jsonl, parse_jsonl, to_jsonl_string, write_jsonl};
pub use sampling::{split_train_eval, stratified_sample, SplitError};

/// The five spectrum positions, ordered from left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PositionLabel {
    PL,
    LW,
    C,
    RW,
    CR,
}

impl PositionLabel {
    pub const ALL: [PositionLabel; 5] = [Self::PL, Self::LW, Self::C, Self::RW, Self::CR];

    /// 1-based ordinal, PL = 1 through CR = 5.
    pub fn ordinal(self) -> usize {
        self as usize + 1
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        ordinal
            .checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
    }

    /// Zero-based slot, handy for indexing five-element arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn distance(self, other: PositionLabel) -> usize {
        self.ordinal().abs_diff(other.ordinal())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PL => "PL",
            Self::LW => "LW",
            Self::C => "C",
            Self::RW => "RW",
            Self::CR => "CR",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            Self::PL => "Progressive-Left",
            Self::LW => "Left-Wing",
            Self::C => "Center",
            Self::RW => "Right-Wing",
            Self::CR => "Conservative-Right",
        }
    }

    /// The broad stage-one leaning this position is refined from.
    pub fn leaning(self) -> Leaning {
        match self {
            Self::PL | Self::LW => Leaning::Left,
            Self::C => Leaning::Center,
            Self::RW | Self::CR => Leaning::Right,
        }
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PositionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown position `{s}` (expected PL, LW, C, RW or CR)"))
    }
}

/// Broad Left/Center/Right leaning used by the first fine-tuning stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leaning {
    Left,
    Center,
    Right,
}

impl Leaning {
    pub const ALL: [Leaning; 3] = [Self::Left, Self::Center, Self::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Left => "Left",
            Self::Center => "Center",
            Self::Right => "Right",
        }
    }
}

impl fmt::Display for Leaning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Statement {
    pub id: String,
    pub speaker_id: String,
    pub topic: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bill {
    pub id: String,
    pub title: String,
    pub text: String,
    pub policy_area: String,
    pub legislative_subjects: Vec<String>,
    pub sponsor_id: String,
    pub sponsor_party: String,
}

/// One co-sponsorship. A row whose co-sponsor equals its sponsor records
/// the sponsor introducing the bill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SponsorshipRecord {
    pub cosponsor_id: String,
    pub sponsor_id: String,
    pub bill_id: String,
}

impl SponsorshipRecord {
    pub fn is_introduction(&self) -> bool {
        self.cosponsor_id == self.sponsor_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VoteDecision {
    Cosponsor,
    Decline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRecord {
    pub agent_id: String,
    pub bill_id: String,
    pub decision: VoteDecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestName {
    PComp,
    PCoord,
    Nolan,
    WSPQ,
}

impl TestName {
    /// Score range reported by each positioning test.
    pub fn range(self) -> (f64, f64) {
        match self {
            Self::PComp => (-10.0, 10.0),
            Self::PCoord | Self::Nolan | Self::WSPQ => (-100.0, 100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Economic,
    Social,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSample {
    pub test_name: TestName,
    pub axis: Axis,
    pub position: PositionLabel,
    pub model_tag: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Statements,
    Bills,
    Sponsorships,
    Votes,
    Scores,
}

impl FromStr for RecordKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "statements" => Self::Statements,
            "bills" => Self::Bills,
            "sponsorships" => Self::Sponsorships,
            "votes" => Self::Votes,
            "scores" => Self::Scores,
            other => return Err(format!("unknown record kind `{other}`")),
        })
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: schema violation in field `{field}`")]
    SchemaViolation { line: usize, field: String },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::MalformedLine { line, .. }
            | Self::DuplicateId { line, .. }
            | Self::SchemaViolation { line, .. } => Some(*line),
            Self::IoFailure { .. } => None,
        }
    }
}

/// A corpus record that can check its own invariants.
pub trait Record: Serialize + serde::de::DeserializeOwned {
    /// Key that must be unique within one file, if the record kind has one.
    fn unique_key(&self) -> Option<String> {
        None
    }

    /// Returns the name of the first field that breaks an invariant.
    fn violation(&self) -> Option<&'static str>;
}

fn blank(s: &str) -> bool {
    s.trim().is_empty()
}

impl Record for Statement {
    fn unique_key(&self) -> Option<String> {
        Some(self.id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if blank(&self.id) {
            Some("id")
        } else if blank(&self.speaker_id) {
            Some("speaker_id")
        } else if blank(&self.text) {
            Some("text")
        } else {
            None
        }
    }
}

impl Record for Bill {
    fn unique_key(&self) -> Option<String> {
        Some(self.id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if blank(&self.id) {
            Some("id")
        } else if blank(&self.policy_area) {
            Some("policy_area")
        } else if blank(&self.sponsor_id) {
            Some("sponsor_id")
        } else {
            None
        }
    }
}

impl Record for SponsorshipRecord {
    fn violation(&self) -> Option<&'static str> {
        if blank(&self.cosponsor_id) {
            Some("cosponsor_id")
        } else if blank(&self.sponsor_id) {
            Some("sponsor_id")
        } else if blank(&self.bill_id) {
            Some("bill_id")
        } else {
            None
        }
    }
}

impl Record for VoteRecord {
    fn unique_key(&self) -> Option<String> {
        Some(format!("{}/{}", self.agent_id, self.bill_id))
    }

    fn violation(&self) -> Option<&'static str> {
        if blank(&self.agent_id) {
            Some("agent_id")
        } else if blank(&self.bill_id) {
            Some("bill_id")
        } else {
            None
        }
    }
}

impl Record for ScoreSample {
    fn violation(&self) -> Option<&'static str> {
        let (lo, hi) = self.test_name.range();
        if !(self.value.is_finite() && lo <= self.value && self.value <= hi) {
            Some("value")
        } else if blank(&self.model_tag) {
            Some("model_tag")
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_are_a_bijection() {
        for (i, p) in PositionLabel::ALL.into_iter().enumerate() {
            assert_eq!(p.ordinal(), i + 1);
            assert_eq!(PositionLabel::from_ordinal(i + 1), Some(p));
        }
        assert_eq!(PositionLabel::from_ordinal(0), None);
        assert_eq!(PositionLabel::from_ordinal(6), None);
        assert_eq!(PositionLabel::PL.distance(PositionLabel::CR), 4);
    }

    #[test]
    fn stage_one_parents() {
        assert_eq!(PositionLabel::PL.leaning(), Leaning::Left);
        assert_eq!(PositionLabel::LW.leaning(), Leaning::Left);
        assert_eq!(PositionLabel::C.leaning(), Leaning::Center);
        assert_eq!(PositionLabel::RW.leaning(), Leaning::Right);
        assert_eq!(PositionLabel::CR.leaning(), Leaning::Right);
    }

    #[test]
    fn score_range_is_checked() {
        let mut s = ScoreSample {
            test_name: TestName::PComp,
            axis: Axis::Economic,
            position: PositionLabel::C,
            model_tag: "m".into(),
            value: 9.5,
        };
        assert_eq!(s.violation(), None);
        s.value = -10.5;
        assert_eq!(s.violation(), Some("value"));
        s.test_name = TestName::PCoord;
        assert_eq!(s.violation(), None);
    }

    #[test]
    fn introduction_rows() {
        let r = SponsorshipRecord {
            cosponsor_id: "a".into(),
            sponsor_id: "a".into(),
            bill_id: "b1".into(),
        };
        assert!(r.is_introduction());
    }
}
