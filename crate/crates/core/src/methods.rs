//! Decision-level post-processing of averaged variant predictions.
//!
//! Three rules turn the `N` variant pairs of a sample into one decision:
//!
//! - **Method 1**: neutralise low-quality pairs with a β filter, sum, round,
//!   rescale by `N`, round again, and accept only a one-hot result.
//! - **Method 2**: majority vote over hardened variants; a tied vote rejects.
//! - **Method 3**: pick the single most confident variant. Never rejects.
//!
//! Rejected samples (class 3) are handed to a continuation, either Method 3
//! or a fallback classifier that sees only the original sample.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::ensemble::AveragedPrediction;
use crate::error::{Error, Result};
use crate::fallback::FallbackModel;
use crate::types::{Decision, Label, ProbPair, Provenance, SampleRecord, Vote};

/// Default β: pairs with both components in `(0.4, 0.6)` are neutralised.
pub const DEFAULT_BETA: f64 = 0.4;
/// Default step of a β sweep.
pub const DEFAULT_SWEEP_RESOLUTION: f64 = 0.02;

/// β threshold of Method 1, strictly inside `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFilter(f64);

impl BetaFilter {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 0.5 {
            Ok(Self(beta))
        } else {
            Err(Error::InvalidBeta(beta))
        }
    }

    pub fn beta(self) -> f64 {
        self.0
    }

    /// Whether `p` lies strictly between `β` and `1 − β`. Pairs sitting
    /// exactly on a boundary keep their value.
    pub fn neutralises(self, p: &ProbPair) -> bool {
        // p1 < 1 - β is the same condition as p2 > β, without the subtraction.
        p.p1() > self.0 && p.p2() > self.0
    }
}

impl Default for BetaFilter {
    fn default() -> Self {
        Self(DEFAULT_BETA)
    }
}

/// Replaces a pair inside `(β, 1 − β)` with `(0.5, 0.5)`.
pub fn beta_filter(p: &ProbPair, filter: BetaFilter) -> ProbPair {
    if filter.neutralises(p) {
        ProbPair::TIE
    } else {
        *p
    }
}

fn require_variants(a: &AveragedPrediction, needed: usize) -> Result<()> {
    if a.n_variants() < needed {
        return Err(Error::TooFewVariants {
            needed,
            found: a.n_variants(),
        });
    }
    Ok(())
}

/// Method 1: filter, sum, round, rescale, round, one-hot check.
///
/// Both roundings are half-away-from-zero. An accepted decision reports the
/// filtered mean `sum / N` as its prediction.
pub fn method1(a: &AveragedPrediction, filter: BetaFilter) -> Result<Decision> {
    require_variants(a, 2)?;
    let n = a.n_variants() as f64;
    let (s1, s2) = a
        .variants()
        .iter()
        .map(|p| beta_filter(p, filter))
        .fold((0.0, 0.0), |(x, y), p| (x + p.p1(), y + p.p2()));
    let hard = ((s1.round() / n).round(), (s2.round() / n).round());
    let class = match hard {
        (h1, h2) if h1 == 1.0 && h2 == 0.0 => Label::Class1,
        (h1, h2) if h1 == 0.0 && h2 == 1.0 => Label::Class2,
        _ => return Ok(Decision::rejected(a.sample_id.clone(), Provenance::Method1)),
    };
    let mean = ProbPair::try_new(s1 / n, s2 / n)?;
    Ok(Decision::accepted(
        a.sample_id.clone(),
        class,
        mean,
        Provenance::Method1,
    ))
}

/// Method 2: strict majority of hard votes; exact-tie variants abstain.
///
/// An accepted decision reports the mean pair of the winning voters.
pub fn method2(a: &AveragedPrediction) -> Result<Decision> {
    require_variants(a, 2)?;
    let mut votes = [0usize; 2];
    for p in a.variants() {
        if let Vote::Class(label) = p.vote() {
            votes[label.index()] += 1;
        }
    }
    let winner = match votes[0].cmp(&votes[1]) {
        std::cmp::Ordering::Greater => Label::Class1,
        std::cmp::Ordering::Less => Label::Class2,
        std::cmp::Ordering::Equal => {
            return Ok(Decision::rejected(a.sample_id.clone(), Provenance::Method2))
        }
    };
    let (s1, s2, k) = a
        .variants()
        .iter()
        .filter(|p| p.vote() == Vote::Class(winner))
        .fold((0.0, 0.0, 0usize), |(x, y, k), p| {
            (x + p.p1(), y + p.p2(), k + 1)
        });
    let mean = ProbPair::try_new(s1 / k as f64, s2 / k as f64)?;
    Ok(Decision::accepted(
        a.sample_id.clone(),
        winner,
        mean,
        Provenance::Method2,
    ))
}

/// Class assigned to a selected pair that is an exact tie.
fn hard_class(p: &ProbPair, tie_class: Label) -> Label {
    p.vote().label().unwrap_or(tie_class)
}

/// Method 3: the most confident variant decides; ties on confidence go to
/// the lowest variant index.
pub fn method3(a: &AveragedPrediction, tie_class: Label) -> Decision {
    let best = a.variants().iter().skip(1).fold(a.original(), |best, p| {
        if p.confidence() > best.confidence() {
            *p
        } else {
            best
        }
    });
    Decision::accepted(
        a.sample_id.clone(),
        hard_class(&best, tie_class),
        best,
        Provenance::Method3,
    )
}

/// Baseline: the original (un-flipped) variant decides. Never rejects.
pub fn no_method(a: &AveragedPrediction, tie_class: Label) -> Decision {
    let p = a.original();
    Decision::accepted(
        a.sample_id.clone(),
        hard_class(&p, tie_class),
        p,
        Provenance::NoMethod,
    )
}

/// Classifies one original sample with the fallback model.
pub fn fallback_decision(
    model: &FallbackModel,
    sample: &SampleRecord,
    tie_class: Label,
) -> Result<Decision> {
    let p = model.predict(sample)?;
    Ok(Decision::accepted(
        sample.id.clone(),
        hard_class(&p, tie_class),
        p,
        Provenance::Fallback,
    ))
}

/// First stage of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primary {
    NoMethod,
    Method1,
    Method2,
    Method3,
    Fallback,
}

/// What happens to samples the primary stage rejects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuation {
    None,
    Method3,
    Fallback,
}

impl fmt::Display for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Continuation::None => "none",
            Continuation::Method3 => "method3",
            Continuation::Fallback => "fallback",
        })
    }
}

/// The named pipelines, in report-table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    NoMethod,
    FallbackOnly,
    M1Fallback,
    M2Fallback,
    Method3,
    M1M3,
    M2M3,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::NoMethod,
        Pipeline::FallbackOnly,
        Pipeline::M1Fallback,
        Pipeline::M2Fallback,
        Pipeline::Method3,
        Pipeline::M1M3,
        Pipeline::M2M3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::NoMethod => "no_method",
            Pipeline::FallbackOnly => "fallback",
            Pipeline::M1Fallback => "m1+fallback",
            Pipeline::M2Fallback => "m2+fallback",
            Pipeline::Method3 => "method3",
            Pipeline::M1M3 => "m1+m3",
            Pipeline::M2M3 => "m2+m3",
        }
    }

    /// Row label for human-readable tables.
    pub fn title(self) -> &'static str {
        match self {
            Pipeline::NoMethod => "No Method",
            Pipeline::FallbackOnly => "Fallback",
            Pipeline::M1Fallback => "Method 1 + Fallback",
            Pipeline::M2Fallback => "Method 2 + Fallback",
            Pipeline::Method3 => "Method 3",
            Pipeline::M1M3 => "Method 1 + 3",
            Pipeline::M2M3 => "Method 2 + 3",
        }
    }

    pub fn stages(self) -> (Primary, Continuation) {
        match self {
            Pipeline::NoMethod => (Primary::NoMethod, Continuation::None),
            Pipeline::FallbackOnly => (Primary::Fallback, Continuation::None),
            Pipeline::M1Fallback => (Primary::Method1, Continuation::Fallback),
            Pipeline::M2Fallback => (Primary::Method2, Continuation::Fallback),
            Pipeline::Method3 => (Primary::Method3, Continuation::None),
            Pipeline::M1M3 => (Primary::Method1, Continuation::Method3),
            Pipeline::M2M3 => (Primary::Method2, Continuation::Method3),
        }
    }

    pub fn needs_fallback(self) -> bool {
        let (primary, continuation) = self.stages();
        primary == Primary::Fallback || continuation == Continuation::Fallback
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPipeline(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub beta: BetaFilter,
    /// Class given to a selected exact tie by Method 3, the baseline, and the fallback.
    pub tie_class: Label,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            beta: BetaFilter::default(),
            tie_class: Label::Class1,
        }
    }
}

/// Fallback model plus the original samples it classifies.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackInputs<'a> {
    pub model: Option<&'a FallbackModel>,
    pub originals: Option<&'a [SampleRecord]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    /// One final decision per input sample, in input order.
    pub decisions: Vec<Decision>,
    /// Samples the primary stage sent to class 3.
    pub rejected_ids: Vec<String>,
    pub continuation_used: Continuation,
}

struct FallbackStage<'a> {
    model: &'a FallbackModel,
    originals: HashMap<&'a str, &'a SampleRecord>,
}

impl<'a> FallbackStage<'a> {
    fn new(inputs: FallbackInputs<'a>) -> Result<Self> {
        let model = inputs.model.ok_or(Error::MissingFallbackModel)?;
        let originals = inputs
            .originals
            .ok_or_else(|| Error::MissingOriginalSamples("*".into()))?
            .iter()
            .map(|s| (s.id.as_str(), s))
            .collect();
        Ok(Self { model, originals })
    }

    fn decide(&self, sample_id: &str, tie_class: Label) -> Result<Decision> {
        let sample = self
            .originals
            .get(sample_id)
            .ok_or_else(|| Error::MissingOriginalSamples(sample_id.to_string()))?;
        fallback_decision(self.model, sample, tie_class)
    }
}

/// Runs a primary stage over every sample and re-decides rejected samples
/// with the continuation.
pub fn run_pipeline(
    dataset: &[AveragedPrediction],
    primary: Primary,
    continuation: Continuation,
    config: &PipelineConfig,
    fallback: FallbackInputs<'_>,
) -> Result<MethodReport> {
    let needs_fallback = primary == Primary::Fallback || continuation == Continuation::Fallback;
    let fallback = if needs_fallback {
        Some(FallbackStage::new(fallback)?)
    } else {
        None
    };
    let tie = config.tie_class;

    let mut decisions = Vec::with_capacity(dataset.len());
    let mut rejected_ids = Vec::new();
    for a in dataset {
        let first = match primary {
            Primary::NoMethod => no_method(a, tie),
            Primary::Method1 => method1(a, config.beta)?,
            Primary::Method2 => method2(a)?,
            Primary::Method3 => method3(a, tie),
            Primary::Fallback => fallback.as_ref().unwrap().decide(&a.sample_id, tie)?,
        };
        if !first.is_rejected() {
            decisions.push(first);
            continue;
        }
        rejected_ids.push(a.sample_id.clone());
        let second = match continuation {
            Continuation::None => first,
            Continuation::Method3 => method3(a, tie),
            Continuation::Fallback => fallback.as_ref().unwrap().decide(&a.sample_id, tie)?,
        };
        decisions.push(second);
    }
    Ok(MethodReport {
        decisions,
        rejected_ids,
        continuation_used: continuation,
    })
}

/// Runs one of the named pipelines.
pub fn run_named(
    dataset: &[AveragedPrediction],
    pipeline: Pipeline,
    config: &PipelineConfig,
    fallback: FallbackInputs<'_>,
) -> Result<MethodReport> {
    let (primary, continuation) = pipeline.stages();
    run_pipeline(dataset, primary, continuation, config, fallback)
}

/// One β of a sweep: Method 1's rejection rate and accuracy on accepted samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub rejected_fraction: f64,
    /// `None` when every sample is rejected.
    pub accepted_accuracy: Option<f64>,
}

/// β values `resolution, 2·resolution, …` strictly below 0.5.
pub fn beta_grid(resolution: f64) -> Result<Vec<f64>> {
    if !(resolution > 0.0 && resolution < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "sweep resolution {resolution} must lie in (0, 0.5)"
        )));
    }
    // Snap to 1e-9 so grid points print as their decimal values.
    Ok((1..)
        .map(|i| (i as f64 * resolution * 1e9).round() / 1e9)
        .take_while(|&b| b < 0.5)
        .collect())
}

pub fn beta_sweep(
    dataset: &[AveragedPrediction],
    labels: &[Label],
    betas: &[f64],
) -> Result<Vec<SweepRow>> {
    if betas.is_empty() {
        return Err(Error::EmptyBetaList);
    }
    if dataset.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions but {} labels",
            dataset.len(),
            labels.len()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::NoSamples);
    }
    betas
        .iter()
        .map(|&beta| {
            let filter = BetaFilter::new(beta)?;
            let (mut rejected, mut correct) = (0usize, 0usize);
            for (a, &label) in dataset.iter().zip(labels) {
                match method1(a, filter)?.outcome.label() {
                    None => rejected += 1,
                    Some(class) if class == label => correct += 1,
                    Some(_) => {}
                }
            }
            let accepted = dataset.len() - rejected;
            Ok(SweepRow {
                beta,
                rejected_fraction: rejected as f64 / dataset.len() as f64,
                accepted_accuracy: (accepted > 0).then(|| correct as f64 / accepted as f64),
            })
        })
        .collect()
}
