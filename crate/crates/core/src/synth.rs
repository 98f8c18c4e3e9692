//! Synthetic scenario: labelled multi-variable time series and a stochastic
//! stand-in predictor that produces Monte-Carlo prediction runs.
//!
//! Each variable of a sample is a stationary Gaussian AR(1) process whose
//! mean depends on the class (0 for class 1, `separation` for class 2).
//! The predictor reads a recency-weighted mean of every sequence. Reversing a
//! sequence moves that weight to the other end, so flip variants see
//! different parts of the window while carrying the same amount of
//! information. The logistic link is the exact class posterior of that
//! statistic, so with `gamma = 1` and no jitter the predictor is calibrated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::augment::{augment_dataset, AugmentedSample, MAX_VARIABLES};
use crate::error::{Error, Result};
use crate::fallback::sigmoid;
use crate::types::{Label, PredictionTensor, ProbPair, SampleRecord};

const TRAINING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_samples: usize,
    pub sequence_length: usize,
    pub n_variables: usize,
    /// Probability that a sample belongs to class 1.
    pub balance: f64,
    /// Mean shift of class 2 relative to class 1, in innovation units.
    pub separation: f64,
    /// Standard deviation of the per-run jitter added to each probability.
    pub noise_scale: f64,
    /// Sharpening exponent; above 1 over-confident, below 1 under-confident.
    pub gamma: f64,
    pub ar_coefficient: f64,
    /// Weight of the last step relative to the first in the predictor's
    /// weighted mean, minus one. 0 makes flip variants indistinguishable.
    pub recency_slope: f64,
    pub mc_runs: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            sequence_length: 32,
            n_variables: 2,
            balance: 0.5,
            separation: 0.9,
            noise_scale: 0.1,
            gamma: 1.0,
            ar_coefficient: 0.6,
            recency_slope: 31.0,
            mc_runs: crate::ensemble::DEFAULT_MC_RUNS,
            seed: 42,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_samples == 0 || self.sequence_length == 0 || self.mc_runs == 0 {
            return fail("sample count, sequence length and run count must be positive");
        }
        if self.n_variables == 0 || self.n_variables > MAX_VARIABLES {
            return fail("variable count must be between 1 and 16");
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return fail("balance must lie in (0, 1)");
        }
        if !self.separation.is_finite() {
            return fail("separation must be finite");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return fail("noise scale must be non-negative");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return fail("gamma must be positive");
        }
        if !(self.recency_slope >= 0.0 && self.recency_slope.is_finite()) {
            return fail("recency slope must be non-negative");
        }
        if self.ar_coefficient.is_nan() || self.ar_coefficient.abs() >= 1.0 {
            return fail("AR coefficient must lie in (-1, 1)");
        }
        Ok(())
    }

    fn class_mean(&self, label: Label) -> f64 {
        match label {
            Label::Class1 => 0.0,
            Label::Class2 => self.separation,
        }
    }
}

/// `q^γ / (q^γ + (1 − q)^γ)`; fixes 0, 0.5 and 1 for every `γ > 0`.
pub fn sharpen(q: f64, gamma: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return q.clamp(0.0, 1.0);
    }
    sigmoid(gamma * (q / (1.0 - q)).ln())
}

fn generate(cfg: &ScenarioConfig, stream: u64, prefix: &str) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let phi = cfg.ar_coefficient;
    let stationary_sd = (1.0 - phi * phi).sqrt().recip();
    (0..cfg.n_samples)
        .map(|i| {
            let label = if rng.random::<f64>() < cfg.balance {
                Label::Class1
            } else {
                Label::Class2
            };
            let mu = cfg.class_mean(label);
            let sequences = (0..cfg.n_variables)
                .map(|_| {
                    let mut x = stationary_sd * rng.sample::<f64, _>(StandardNormal);
                    let mut seq = Vec::with_capacity(cfg.sequence_length);
                    seq.push(mu + x);
                    for _ in 1..cfg.sequence_length {
                        x = phi * x + rng.sample::<f64, _>(StandardNormal);
                        seq.push(mu + x);
                    }
                    seq
                })
                .collect();
            SampleRecord::new(format!("{prefix}{i}"), sequences, label)
        })
        .collect()
}

/// Evaluation samples `s0, s1, …`; deterministic in the seed.
pub fn generate_samples(cfg: &ScenarioConfig) -> Result<Vec<SampleRecord>> {
    generate(cfg, 0, "s")
}

/// An independent draw from the same scenario (`t0, t1, …`), for fitting a
/// fallback model without touching the evaluation samples.
pub fn generate_training_samples(cfg: &ScenarioConfig) -> Result<Vec<SampleRecord>> {
    generate(cfg, TRAINING_STREAM, "t")
}

fn recency_weights(len: usize, slope: f64) -> Vec<f64> {
    let span = (len.max(2) - 1) as f64;
    (0..len).map(|t| 1.0 + slope * t as f64 / span).collect()
}

/// Variance of the recency-weighted mean of one stationary AR(1) sequence
/// with unit innovations.
fn weighted_mean_variance(w: &[f64], phi: f64) -> f64 {
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            acc += wi * wj * phi.powi(i.abs_diff(j) as i32);
        }
    }
    acc / (1.0 - phi * phi) / (total * total)
}

/// Calibrated class-1 posterior of the stand-in predictor for one variant.
struct Posterior {
    weights: Vec<f64>,
    weight_total: f64,
    slope: f64,
    midpoint: f64,
    prior_logit: f64,
}

impl Posterior {
    fn new(cfg: &ScenarioConfig) -> Self {
        let weights = recency_weights(cfg.sequence_length, cfg.recency_slope);
        let weight_total = weights.iter().sum();
        let variance =
            weighted_mean_variance(&weights, cfg.ar_coefficient) / cfg.n_variables as f64;
        let (m1, m2) = (cfg.class_mean(Label::Class1), cfg.class_mean(Label::Class2));
        Self {
            weights,
            weight_total,
            slope: (m2 - m1) / variance,
            midpoint: (m1 + m2) / 2.0,
            prior_logit: (cfg.balance / (1.0 - cfg.balance)).ln(),
        }
    }

    fn statistic(&self, sample: &SampleRecord) -> f64 {
        let per_var: f64 = sample
            .sequences()
            .iter()
            .map(|seq| {
                seq.iter()
                    .zip(&self.weights)
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
                    / self.weight_total
            })
            .sum();
        per_var / sample.n_variables() as f64
    }

    fn class1_logit(&self, sample: &SampleRecord) -> f64 {
        self.prior_logit + self.slope * (self.midpoint - self.statistic(sample))
    }
}

/// Monte-Carlo runs of the stand-in predictor over an augmented dataset.
///
/// `augmented` must be sample-major with `2^V` variants per sample, as
/// produced by [`augment_dataset`]. Each sample draws from its own random
/// stream, so results do not depend on sample order or batching.
pub fn predict_runs(
    augmented: &[AugmentedSample],
    cfg: &ScenarioConfig,
) -> Result<Vec<PredictionTensor>> {
    cfg.validate()?;
    let n_variants = 1usize << cfg.n_variables;
    if !augmented.len().is_multiple_of(n_variants) {
        return Err(Error::InvalidConfig(format!(
            "augmented dataset size {} is not a multiple of {n_variants} variants",
            augmented.len()
        )));
    }
    let posterior = Posterior::new(cfg);
    augmented
        .chunks(n_variants)
        .enumerate()
        .map(|(k, group)| {
            let sample_id = &group[0].sample_id;
            if group
                .iter()
                .enumerate()
                .any(|(n, a)| a.variant_index != n || &a.sample_id != sample_id)
            {
                return Err(Error::InvalidConfig(format!(
                    "augmented records for `{sample_id}` are not in variant order"
                )));
            }
            let base: Vec<f64> = group
                .iter()
                .map(|a| sharpen(sigmoid(posterior.class1_logit(&a.record)), cfg.gamma))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64 + 1);
            let runs = (0..cfg.mc_runs)
                .map(|_| {
                    base.iter()
                        .map(|&q| {
                            let e1: f64 = rng.sample(StandardNormal);
                            let e2: f64 = rng.sample(StandardNormal);
                            jittered(q, cfg.noise_scale * e1, cfg.noise_scale * e2)
                        })
                        .collect()
                })
                .collect();
            PredictionTensor::new(sample_id.clone(), runs)
        })
        .collect()
}

/// Adds jitter to both components of `(q, 1 − q)`, clips at zero and
/// renormalises.
fn jittered(q: f64, d1: f64, d2: f64) -> ProbPair {
    let a = (q + d1).max(0.0);
    let b = (1.0 - q + d2).max(0.0);
    if a + b == 0.0 {
        return ProbPair::TIE;
    }
    ProbPair::from_class1(a / (a + b))
}

/// Generates samples, augments them, and runs the predictor.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(Vec<SampleRecord>, Vec<PredictionTensor>)> {
    let samples = generate_samples(cfg)?;
    let tensors = predict_runs(&augment_dataset(&samples)?, cfg)?;
    Ok((samples, tensors))
}
