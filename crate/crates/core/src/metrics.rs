//! Calibration metrics over final decisions.
//!
//! Confidences live in `[0.5, 1]` and are grouped into equal-width bins
//! `[0.5, 0.5 + w), …, [1 − w, 1]`. The calibration error of a bin is the
//! distance between its accuracy and its *center*; ECE is the count-weighted
//! mean of those errors and MCE their maximum over non-empty bins. MC and MA
//! are the count-weighted mean confidence and accuracy, RS their gap.
//!
//! Percent-valued quantities (ECE, MCE, MC, MA, BSL, RS) are reported on a
//! 0–100 scale; NLL is a plain mean in nats.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Decision, Label, ProbPair};

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
/// Floor applied to the true-class probability before taking its log.
pub const NLL_CLIP: f64 = 1e-12;
/// |MA − MC| at or below this counts as balanced.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub count: usize,
    pub correct: usize,
    /// Mean confidence of the members; 0 for an empty bin.
    pub mean_confidence: f64,
}

impl ConfidenceBin {
    pub fn accuracy(&self) -> Option<f64> {
        (self.count > 0).then(|| self.correct as f64 / self.count as f64)
    }
}

/// Equal-width partition of `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinLayout {
    width: f64,
    n_bins: usize,
}

impl BinLayout {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 0.5) {
            return Err(Error::InvalidBinWidth(width));
        }
        let ratio = 0.5 / width;
        let n_bins = ratio.round();
        if (ratio - n_bins).abs() > 1e-9 {
            return Err(Error::InvalidBinWidth(width));
        }
        Ok(Self {
            width,
            n_bins: n_bins as usize,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// `0.5 + i·width`, snapped to 12 decimals so edges are the decimal
    /// values they name.
    pub fn lower(&self, i: usize) -> f64 {
        snap(0.5 + i as f64 * self.width)
    }

    pub fn center(&self, i: usize) -> f64 {
        snap((self.lower(i) + self.upper(i)) / 2.0)
    }

    pub fn upper(&self, i: usize) -> f64 {
        if i + 1 == self.n_bins {
            1.0
        } else {
            self.lower(i + 1)
        }
    }

    /// Bin holding confidence `c`; the last bin is closed at 1.
    pub fn index_of(&self, c: f64) -> usize {
        let last = self.n_bins - 1;
        let mut i = (((c - 0.5) / self.width).floor().max(0.0) as usize).min(last);
        // The division can land one bin off near a boundary; settle on the
        // bounds as defined by lower().
        while i < last && c >= self.lower(i + 1) {
            i += 1;
        }
        while i > 0 && c < self.lower(i) {
            i -= 1;
        }
        i
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn check_aligned(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!("{a} {what} but {b} labels")));
    }
    Ok(())
}

/// Assigns every decision to its confidence bin. Empty bins are kept.
pub fn bin_decisions(
    decisions: &[Decision],
    labels: &[Label],
    bin_width: f64,
) -> Result<Vec<ConfidenceBin>> {
    check_aligned("decisions", decisions.len(), labels.len())?;
    let layout = BinLayout::new(bin_width)?;
    let mut counts = vec![0usize; layout.n_bins()];
    let mut correct = vec![0usize; layout.n_bins()];
    let mut conf_sums = vec![0.0; layout.n_bins()];
    for (d, &label) in decisions.iter().zip(labels) {
        let (Some(class), Some(c)) = (d.outcome.label(), d.confidence()) else {
            return Err(Error::RejectedDecisionPresent(d.sample_id.clone()));
        };
        let i = layout.index_of(c);
        counts[i] += 1;
        conf_sums[i] += c;
        if class == label {
            correct[i] += 1;
        }
    }
    Ok((0..layout.n_bins())
        .map(|i| {
            let (lower, upper) = (layout.lower(i), layout.upper(i));
            ConfidenceBin {
                lower,
                upper,
                center: layout.center(i),
                count: counts[i],
                correct: correct[i],
                mean_confidence: if counts[i] > 0 {
                    conf_sums[i] / counts[i] as f64
                } else {
                    0.0
                },
            }
        })
        .collect())
}

fn total(bins: &[ConfidenceBin]) -> Result<f64> {
    match bins.iter().map(|b| b.count).sum::<usize>() {
        0 => Err(Error::NoSamples),
        n => Ok(n as f64),
    }
}

/// Count-weighted mean confidence and accuracy, in percent.
pub fn mc_ma(bins: &[ConfidenceBin]) -> Result<(f64, f64)> {
    let n = total(bins)?;
    let (mut conf, mut acc) = (0.0, 0.0);
    for b in bins.iter().filter(|b| b.count > 0) {
        conf += b.count as f64 * b.mean_confidence;
        acc += b.correct as f64;
    }
    Ok((100.0 * conf / n, 100.0 * acc / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfidenceFlag {
    /// Mean confidence exceeds mean accuracy.
    #[serde(rename = "OC")]
    OverConfident,
    /// Mean accuracy exceeds mean confidence.
    #[serde(rename = "UC")]
    UnderConfident,
    Balanced,
}

impl fmt::Display for ConfidenceFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfidenceFlag::OverConfident => "OC",
            ConfidenceFlag::UnderConfident => "UC",
            ConfidenceFlag::Balanced => "Balanced",
        })
    }
}

impl std::str::FromStr for ConfidenceFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "OC" => Ok(ConfidenceFlag::OverConfident),
            "UC" => Ok(ConfidenceFlag::UnderConfident),
            "Balanced" => Ok(ConfidenceFlag::Balanced),
            other => Err(Error::InvalidConfig(format!(
                "unknown confidence flag `{other}`"
            ))),
        }
    }
}

/// `|MA − MC|` and the direction of the gap.
pub fn reliability_score(mc: f64, ma: f64) -> (f64, ConfidenceFlag) {
    let gap = mc - ma;
    let flag = if gap.abs() <= BALANCE_TOLERANCE {
        ConfidenceFlag::Balanced
    } else if gap > 0.0 {
        ConfidenceFlag::OverConfident
    } else {
        ConfidenceFlag::UnderConfident
    };
    (gap.abs(), flag)
}

/// Expected and maximum deviation of bin accuracy from bin center, in percent.
pub fn ece_mce(bins: &[ConfidenceBin]) -> Result<(f64, f64)> {
    let n = total(bins)?;
    let (mut weighted, mut max) = (0.0, 0.0f64);
    for b in bins {
        if let Some(acc) = b.accuracy() {
            let err = (acc - b.center).abs();
            weighted += b.count as f64 * err;
            max = max.max(err);
        }
    }
    // A weighted mean never exceeds the max; clip the last-ulp rounding.
    let ece = (weighted / n).min(max);
    Ok((100.0 * ece, 100.0 * max))
}

/// ECE measured against each bin's mean confidence instead of its center,
/// in percent. Emitted for comparison with tools that use that convention.
pub fn ece_mean_confidence(bins: &[ConfidenceBin]) -> Result<f64> {
    let n = total(bins)?;
    let weighted: f64 = bins
        .iter()
        .filter_map(|b| {
            b.accuracy()
                .map(|acc| b.count as f64 * (acc - b.mean_confidence).abs())
        })
        .sum();
    Ok(100.0 * weighted / n)
}

/// Mean negative log-probability of the true class (natural log, clipped).
pub fn nll(predictions: &[ProbPair], labels: &[Label]) -> Result<f64> {
    check_aligned("predictions", predictions.len(), labels.len())?;
    if predictions.is_empty() {
        return Err(Error::NoSamples);
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, &y)| -p.prob_of(y).clamp(NLL_CLIP, 1.0).ln())
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Brier loss: mean squared error against the one-hot target, averaged
/// over both classes, in percent.
pub fn bsl(predictions: &[ProbPair], labels: &[Label]) -> Result<f64> {
    check_aligned("predictions", predictions.len(), labels.len())?;
    if predictions.is_empty() {
        return Err(Error::NoSamples);
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let (t1, t2) = if y == Label::Class1 {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            ((p.p1() - t1).powi(2) + (p.p2() - t2).powi(2)) / 2.0
        })
        .sum();
    Ok(100.0 * sum / predictions.len() as f64)
}

/// All reliability metrics for one set of decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n_samples: usize,
    pub bin_width: f64,
    pub ece: f64,
    pub mce: f64,
    pub mc: f64,
    pub ma: f64,
    pub nll: f64,
    pub bsl: f64,
    pub flag: ConfidenceFlag,
    pub rs: f64,
    /// ECE against per-bin mean confidence rather than bin center.
    pub ece_mean_confidence: f64,
    pub bins: Vec<ConfidenceBin>,
}

/// Scores aligned decisions, predictions, and labels.
///
/// `predictions[i]` should be the pair whose larger component is the
/// confidence of `decisions[i]`.
pub fn build_report(
    decisions: &[Decision],
    predictions: &[ProbPair],
    labels: &[Label],
    bin_width: f64,
) -> Result<CalibrationReport> {
    check_aligned("predictions", predictions.len(), labels.len())?;
    if decisions.is_empty() {
        return Err(Error::NoSamples);
    }
    let bins = bin_decisions(decisions, labels, bin_width)?;
    let (mc, ma) = mc_ma(&bins)?;
    let (ece, mce) = ece_mce(&bins)?;
    let (rs, flag) = reliability_score(mc, ma);
    Ok(CalibrationReport {
        n_samples: decisions.len(),
        bin_width,
        ece,
        mce,
        mc,
        ma,
        nll: nll(predictions, labels)?,
        bsl: bsl(predictions, labels)?,
        flag,
        rs,
        ece_mean_confidence: ece_mean_confidence(&bins)?,
        bins,
    })
}

/// [`build_report`] using the prediction each decision carries.
pub fn report_for_decisions(
    decisions: &[Decision],
    labels: &[Label],
    bin_width: f64,
) -> Result<CalibrationReport> {
    let predictions = decisions
        .iter()
        .map(|d| {
            d.prediction()
                .ok_or_else(|| Error::RejectedDecisionPresent(d.sample_id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    build_report(decisions, &predictions, labels, bin_width)
}
