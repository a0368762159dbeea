use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetrologyError;
use crate::clockwork::SpectralModel;

/// Smallest success probability that still meets the accuracy postulate.
pub const POSTULATE_SUCCESS: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// Uniform over `[-1-Δλ, 1+Δλ]`.
    UniformFullRange,
    /// `λ ± 2Δλ`, pushed towards 0 so the outcome stays in band and rounds
    /// to a neighbouring grid point.
    AdversarialOffset,
}

/// Outcome law: with probability `success_prob` the true eigenvalue plus
/// uniform noise in `[-Δλ, Δλ]`, otherwise a failure-mode outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyModel {
    delta: f64,
    success_prob: f64,
    failure_mode: FailureMode,
}

impl AccuracyModel {
    pub fn new(delta: f64, success_prob: f64, failure_mode: FailureMode) -> Result<Self, MetrologyError> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(MetrologyError::InvalidModel(format!("accuracy {delta} must be finite and >= 0")));
        }
        if !(POSTULATE_SUCCESS..=1.0).contains(&success_prob) {
            return Err(MetrologyError::InvalidModel(format!(
                "success probability {success_prob} outside [3/4, 1]"
            )));
        }
        Ok(Self { delta, success_prob, failure_mode })
    }

    /// Success probability exactly 3/4 with uniform failures.
    pub fn postulate(delta: f64) -> Result<Self, MetrologyError> {
        Self::new(delta, POSTULATE_SUCCESS, FailureMode::UniformFullRange)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    pub fn failure_mode(&self) -> FailureMode {
        self.failure_mode
    }

    /// One noisy outcome for true eigenvalue `lambda`.
    pub fn perturb<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> f64 {
        let d = self.delta;
        if rng.gen::<f64>() < self.success_prob {
            if d == 0.0 {
                lambda
            } else {
                lambda + rng.gen_range(-d..=d)
            }
        } else {
            match self.failure_mode {
                FailureMode::UniformFullRange => Uniform::new_inclusive(-1.0 - d, 1.0 + d).sample(rng),
                FailureMode::AdversarialOffset => {
                    if lambda > 0.0 {
                        lambda - 2.0 * d
                    } else {
                        lambda + 2.0 * d
                    }
                }
            }
        }
    }
}

/// Draws eigenvalues with their exact outcome probabilities.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    values: Vec<f64>,
    index: WeightedIndex<u32>,
    d: u64,
}

impl ExactSampler {
    pub fn new(model: &SpectralModel) -> Self {
        let values = model.entries.iter().map(|e| e.eigenvalue).collect();
        let weights = model.entries.iter().map(|e| e.multiplicity as u32);
        let index = WeightedIndex::new(weights).expect("spectral model has positive weights");
        Self { values, index, d: model.d }
    }

    pub fn d(&self) -> u64 {
        self.d
    }
}

/// `λ_j` with probability `multiplicity / d`.
pub fn sample_exact<R: Rng + ?Sized>(sampler: &ExactSampler, rng: &mut R) -> f64 {
    sampler.values[sampler.index.sample(rng)]
}

/// A true eigenvalue from the model, then an outcome from the accuracy law.
/// Returns `(true value, outcome)`.
pub fn sample_with_accuracy<R: Rng + ?Sized>(
    accuracy: &AccuracyModel,
    sampler: &ExactSampler,
    rng: &mut R,
) -> (f64, f64) {
    let lambda = sample_exact(sampler, rng);
    (lambda, accuracy.perturb(lambda, rng))
}

/// Generator for batch `index` under master seed `seed`: the ChaCha stream
/// number is the batch index, so batches never share a stream.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub truths: Vec<f64>,
    pub seed: u64,
    pub batch_index: u64,
    pub model: AccuracyModel,
    pub d: u64,
    pub r: u64,
    pub s: u64,
}

impl SampleBatch {
    pub fn draw(
        sampler: &ExactSampler,
        accuracy: &AccuracyModel,
        samples: usize,
        seed: u64,
        batch_index: u64,
        r: u64,
        s: u64,
    ) -> Self {
        let mut rng = batch_rng(seed, batch_index);
        let (truths, values) = (0..samples).map(|_| sample_with_accuracy(accuracy, sampler, &mut rng)).unzip();
        Self { values, truths, seed, batch_index, model: *accuracy, d: sampler.d(), r, s }
    }

    /// Fraction of outcomes within `Δλ` of their true eigenvalue.
    pub fn within_accuracy(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let hits = self
            .values
            .iter()
            .zip(&self.truths)
            .filter(|(v, t)| (*v - *t).abs() <= self.model.delta())
            .count();
        hits as f64 / self.values.len() as f64
    }
}

/// Batches `0..count`; identical output whether drawn serially or on the
/// rayon pool.
#[allow(clippy::too_many_arguments)]
pub fn draw_batches(
    sampler: &ExactSampler,
    accuracy: &AccuracyModel,
    samples: usize,
    count: u64,
    seed: u64,
    r: u64,
    s: u64,
    parallel: bool,
) -> Vec<SampleBatch> {
    let one = |i: u64| SampleBatch::draw(sampler, accuracy, samples, seed, i, r, s);
    if parallel {
        (0..count).into_par_iter().map(one).collect()
    } else {
        (0..count).map(one).collect()
    }
}
