//! Class-3 fallback classifier.
//!
//! Either a small logistic-regression baseline trained here, or a lookup
//! table of probabilities produced by an external model. Both only ever see
//! the original (un-flipped) sample.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{Label, ProbPair, SampleRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 300,
            l2: 1e-3,
            seed: 0,
        }
    }
}

/// Logistic model over flattened, standardised sequences.
///
/// `sigmoid(w · x + b)` is the class-1 probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    shape: (usize, usize),
    weights: Vec<f64>,
    bias: f64,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl LogisticModel {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `(variables, sequence length)` the model was fit on.
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn features(&self, sample: &SampleRecord) -> Result<Vec<f64>> {
        let found = (sample.n_variables(), sample.sequence_length());
        if found != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found,
            });
        }
        Ok(flatten(sample)
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    /// Linear score `w · x + b` on standardised features.
    pub fn score(&self, sample: &SampleRecord) -> Result<f64> {
        let x = self.features(sample)?;
        Ok(dot(&self.weights, &x) + self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FallbackModel {
    Logistic(LogisticModel),
    External(BTreeMap<String, ProbPair>),
}

impl FallbackModel {
    /// Untrained logistic model with all-zero weights; predicts `(0.5, 0.5)`.
    pub fn zero(n_variables: usize, sequence_length: usize) -> Self {
        let d = n_variables * sequence_length;
        FallbackModel::Logistic(LogisticModel {
            shape: (n_variables, sequence_length),
            weights: vec![0.0; d],
            bias: 0.0,
            means: vec![0.0; d],
            scales: vec![1.0; d],
        })
    }

    pub fn predict(&self, sample: &SampleRecord) -> Result<ProbPair> {
        match self {
            FallbackModel::Logistic(model) => {
                Ok(ProbPair::from_class1(sigmoid(model.score(sample)?)))
            }
            FallbackModel::External(table) => table
                .get(&sample.id)
                .copied()
                .ok_or_else(|| Error::UnknownSampleForExternal(sample.id.clone())),
        }
    }

    /// Builds an external model from `(sample_id, p1, p2)` rows.
    pub fn load_external<S: AsRef<str>>(rows: &[(S, f64, f64)]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (id, p1, p2) in rows {
            let pair = ProbPair::validate(*p1, *p2)?;
            if table.insert(id.as_ref().to_string(), pair).is_some() {
                return Err(Error::DuplicateSampleId(id.as_ref().to_string()));
            }
        }
        Ok(FallbackModel::External(table))
    }

    /// Predictions for `samples` as `(sample_id, pair)` rows, in input order.
    pub fn export(&self, samples: &[SampleRecord]) -> Result<Vec<(String, ProbPair)>> {
        samples
            .iter()
            .map(|s| Ok((s.id.clone(), self.predict(s)?)))
            .collect()
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn flatten(sample: &SampleRecord) -> impl Iterator<Item = f64> + '_ {
    sample.sequences().iter().flatten().copied()
}

fn target(label: Label) -> f64 {
    match label {
        Label::Class1 => 1.0,
        Label::Class2 => 0.0,
    }
}

/// Fits the logistic baseline by full-batch gradient descent.
pub fn train_builtin(samples: &[SampleRecord], config: &TrainConfig) -> Result<FallbackModel> {
    train_with_history(samples, config).map(|(model, _)| FallbackModel::Logistic(model))
}

/// Like [`train_builtin`], also returning the objective before each update
/// and after the last one (`iterations + 1` values).
///
/// The objective is mean cross-entropy plus `l2 / 2 · |w|²` (bias excluded).
pub fn train_with_history(
    samples: &[SampleRecord],
    config: &TrainConfig,
) -> Result<(LogisticModel, Vec<f64>)> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite())
        || config.l2.is_nan()
        || config.l2 < 0.0
    {
        return Err(Error::InvalidConfig(
            "learning rate must be positive and l2 non-negative".into(),
        ));
    }
    let first = samples.first().ok_or(Error::SingleClassDataset)?;
    if samples.iter().all(|s| s.label == first.label) {
        return Err(Error::SingleClassDataset);
    }
    let shape = (first.n_variables(), first.sequence_length());
    if let Some(bad) = samples
        .iter()
        .find(|s| (s.n_variables(), s.sequence_length()) != shape)
    {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: (bad.n_variables(), bad.sequence_length()),
        });
    }

    let d = shape.0 * shape.1;
    let n = samples.len() as f64;
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| flatten(s).collect()).collect();
    let mut means = vec![0.0; d];
    for row in &raw {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = vec![0.0; d];
    for row in &raw {
        for ((s, x), m) in scales.iter_mut().zip(row).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    scales
        .iter_mut()
        .for_each(|s| *s = if *s / n > 1e-24 { (*s / n).sqrt() } else { 1.0 });
    let xs: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(means.iter().zip(&scales))
                .map(|(x, (m, s))| (x - m) / s)
                .collect()
        })
        .collect();
    let ys: Vec<f64> = samples.iter().map(|s| target(s.label)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: Vec<f64> = (0..d).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut bias = 0.0;

    let objective = |w: &[f64], b: f64| -> f64 {
        let data: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let z = dot(w, x) + b;
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n;
        data + 0.5 * config.l2 * dot(w, w)
    };

    let mut history = Vec::with_capacity(config.iterations + 1);
    for it in 0..config.iterations {
        let loss = objective(&weights, bias);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(it));
        }
        history.push(loss);

        let mut grad_w = vec![0.0; d];
        let mut grad_b = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let residual = sigmoid(dot(&weights, x) + bias) - y;
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += residual * xi;
            }
            grad_b += residual;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * (g / n + config.l2 * *w);
        }
        bias -= config.learning_rate * grad_b / n;
    }
    let loss = objective(&weights, bias);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss(config.iterations));
    }
    history.push(loss);

    Ok((
        LogisticModel {
            shape,
            weights,
            bias,
            means,
            scales,
        },
        history,
    ))
}
