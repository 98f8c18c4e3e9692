//! Domain types shared by every stage of the pipeline.
//!
//! All values are immutable once constructed. Constructors enforce the
//! invariants, so downstream code can rely on them without re-checking.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum tolerance accepted when reading probabilities from outside.
pub const INGEST_TOLERANCE: f64 = 1e-6;
/// Sum tolerance maintained by everything built in-process.
pub const INTERNAL_TOLERANCE: f64 = 1e-9;

/// A binary probability vector `[p1, p2]` with `p1 + p2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPair {
    p1: f64,
    p2: f64,
}

impl ProbPair {
    /// The exact tie `(0.5, 0.5)`.
    pub const TIE: ProbPair = ProbPair { p1: 0.5, p2: 0.5 };

    /// Validates a raw pair read from an external source.
    ///
    /// Pairs whose sum is within `1e-6` of one are accepted; if the drift
    /// exceeds the internal `1e-9` tolerance the components are rescaled.
    pub fn validate(p1: f64, p2: f64) -> Result<Self> {
        Self::check(p1, p2, INGEST_TOLERANCE)
    }

    /// Strict constructor for in-process values (tolerance `1e-9`, no rescaling).
    pub fn try_new(p1: f64, p2: f64) -> Result<Self> {
        Self::check(p1, p2, INTERNAL_TOLERANCE)
    }

    fn check(p1: f64, p2: f64, tolerance: f64) -> Result<Self> {
        if !p1.is_finite() || !p2.is_finite() {
            return Err(Error::NonFinite);
        }
        for value in [p1, p2] {
            if !(-INTERNAL_TOLERANCE..=1.0 + INTERNAL_TOLERANCE).contains(&value) {
                return Err(Error::OutOfRange { value });
            }
        }
        let sum = p1 + p2;
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::NonSimplex { p1, p2, sum });
        }
        let (p1, p2) = if (sum - 1.0).abs() > INTERNAL_TOLERANCE {
            (p1 / sum, p2 / sum)
        } else {
            (p1, p2)
        };
        Ok(Self {
            p1: p1.clamp(0.0, 1.0),
            p2: p2.clamp(0.0, 1.0),
        })
    }

    /// Builds `(q, 1 - q)`; the result satisfies the simplex exactly.
    pub fn from_class1(q: f64) -> Self {
        debug_assert!(q.is_finite());
        let q = q.clamp(0.0, 1.0);
        Self { p1: q, p2: 1.0 - q }
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Probability assigned to `label`.
    pub fn prob_of(&self, label: Label) -> f64 {
        match label {
            Label::Class1 => self.p1,
            Label::Class2 => self.p2,
        }
    }

    /// Confidence score: the larger component, always in `[0.5, 1]`.
    pub fn confidence(&self) -> f64 {
        self.p1.max(self.p2)
    }

    /// Hard vote of this pair; an exact tie abstains.
    pub fn vote(&self) -> Vote {
        if self.p1 > self.p2 {
            Vote::Class(Label::Class1)
        } else if self.p2 > self.p1 {
            Vote::Class(Label::Class2)
        } else {
            Vote::Tie
        }
    }

    pub fn swap(&self) -> Self {
        Self {
            p1: self.p2,
            p2: self.p1,
        }
    }

    pub fn is_tie(&self) -> bool {
        self.p1 == self.p2
    }
}

/// Confidence score of a pair (its larger component).
pub fn confidence_of(p: &ProbPair) -> f64 {
    p.confidence()
}

/// Index of the larger component, or [`Vote::Tie`] for an exact tie.
pub fn argmax_class(p: &ProbPair) -> Vote {
    p.vote()
}

/// Ground-truth or predicted class. Class 1 is index 0, class 2 is index 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Class1,
    Class2,
}

impl Label {
    pub fn from_index(index: i64) -> Result<Self> {
        match index {
            0 => Ok(Label::Class1),
            1 => Ok(Label::Class2),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Class1 => 0,
            Label::Class2 => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::Class1 => Label::Class2,
            Label::Class2 => Label::Class1,
        }
    }
}

/// Result of hardening a [`ProbPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    Class(Label),
    Tie,
}

impl Vote {
    pub fn label(self) -> Option<Label> {
        match self {
            Vote::Class(label) => Some(label),
            Vote::Tie => None,
        }
    }
}

/// One windowed time-series sample: `V` equal-length sequences and a label.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    sequences: Vec<Vec<f64>>,
    pub label: Label,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, sequences: Vec<Vec<f64>>, label: Label) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: &str| Error::InvalidSample {
            id: id.clone(),
            reason: reason.to_string(),
        };
        let first = sequences.first().ok_or_else(|| invalid("no variables"))?;
        if first.is_empty() {
            return Err(invalid("empty sequence"));
        }
        if sequences.iter().any(|s| s.len() != first.len()) {
            return Err(invalid("sequences have unequal lengths"));
        }
        if sequences.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite value"));
        }
        Ok(Self {
            id,
            sequences,
            label,
        })
    }

    pub fn sequences(&self) -> &[Vec<f64>] {
        &self.sequences
    }

    pub fn n_variables(&self) -> usize {
        self.sequences.len()
    }

    pub fn sequence_length(&self) -> usize {
        self.sequences[0].len()
    }

    /// Same sample with replaced sequences; shape is preserved by callers.
    pub(crate) fn with_sequences(&self, id: String, sequences: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(sequences.len(), self.sequences.len());
        Self {
            id,
            sequences,
            label: self.label,
        }
    }
}

/// Per-sample Monte-Carlo prediction grid: `runs[t][n]` is run `t` on variant `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTensor {
    pub sample_id: String,
    runs: Vec<Vec<ProbPair>>,
}

impl PredictionTensor {
    pub fn new(sample_id: impl Into<String>, runs: Vec<Vec<ProbPair>>) -> Result<Self> {
        let sample_id = sample_id.into();
        let Some(first) = runs.first() else {
            return Err(Error::EmptyTensor(sample_id));
        };
        let n = first.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidVariantCount(n));
        }
        if runs.iter().any(|r| r.len() != n) {
            return Err(Error::RaggedRuns(format!(
                "sample `{sample_id}` has runs with differing variant counts"
            )));
        }
        Ok(Self { sample_id, runs })
    }

    pub fn runs(&self) -> &[Vec<ProbPair>] {
        &self.runs
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn n_variants(&self) -> usize {
        self.runs[0].len()
    }
}

/// Final verdict for a sample. `Rejected` is the routing state for class 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Class1,
    Class2,
    Rejected,
}

impl Outcome {
    pub fn label(self) -> Option<Label> {
        match self {
            Outcome::Class1 => Some(Label::Class1),
            Outcome::Class2 => Some(Label::Class2),
            Outcome::Rejected => None,
        }
    }
}

impl From<Label> for Outcome {
    fn from(label: Label) -> Self {
        match label {
            Label::Class1 => Outcome::Class1,
            Label::Class2 => Outcome::Class2,
        }
    }
}

/// Which stage produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Method1,
    Method2,
    Method3,
    Fallback,
    NoMethod,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Method1 => "method1",
            Provenance::Method2 => "method2",
            Provenance::Method3 => "method3",
            Provenance::Fallback => "fallback",
            Provenance::NoMethod => "no_method",
        })
    }
}

/// A method's verdict for one sample.
///
/// Accepted decisions carry the probability pair the method exposes; its
/// larger component is the reported confidence, and it is the pair scored by
/// NLL and Brier loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub sample_id: String,
    pub outcome: Outcome,
    prediction: Option<ProbPair>,
    pub decided_by: Provenance,
}

impl Decision {
    pub fn accepted(
        sample_id: impl Into<String>,
        class: Label,
        prediction: ProbPair,
        decided_by: Provenance,
    ) -> Self {
        Self {
            sample_id: sample_id.into(),
            outcome: class.into(),
            prediction: Some(prediction),
            decided_by,
        }
    }

    pub fn rejected(sample_id: impl Into<String>, decided_by: Provenance) -> Self {
        Self {
            sample_id: sample_id.into(),
            outcome: Outcome::Rejected,
            prediction: None,
            decided_by,
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.outcome == Outcome::Rejected
    }

    /// Reported confidence; `None` iff rejected.
    pub fn confidence(&self) -> Option<f64> {
        self.prediction.map(|p| p.confidence())
    }

    pub fn prediction(&self) -> Option<ProbPair> {
        self.prediction
    }
}
