use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MetrologyError;

/// Largest ancilla count for exact tables.
pub const MAX_ANCILLAS: u32 = 14;

/// Eigenphases of a small unitary and the input's amplitudes on the
/// matching eigenvectors. Only `|amplitude|²` enters the outcome law, so
/// amplitudes are taken real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimationSetup {
    m: u32,
    components: Vec<(f64, f64)>,
}

impl PhaseEstimationSetup {
    /// `components` are `(phase in [0,1), amplitude)` pairs.
    pub fn new(m: u32, components: Vec<(f64, f64)>) -> Result<Self, MetrologyError> {
        if m > MAX_ANCILLAS {
            return Err(MetrologyError::AncillaCap { m, cap: MAX_ANCILLAS });
        }
        if components.is_empty() {
            return Err(MetrologyError::InvalidSetup("no eigencomponents".into()));
        }
        for &(phi, _) in &components {
            if !(0.0..1.0).contains(&phi) {
                return Err(MetrologyError::InvalidSetup(format!("phase {phi} outside [0, 1)")));
            }
        }
        let norm: f64 = components.iter().map(|&(_, a)| a * a).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(MetrologyError::InvalidSetup(format!("amplitudes have squared norm {norm}")));
        }
        Ok(Self { m, components })
    }

    /// A single eigenvector input.
    pub fn eigenstate(m: u32, phase: f64) -> Result<Self, MetrologyError> {
        Self::new(m, vec![(phase, 1.0)])
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }
}

/// Probability of reading `j` from `m` ancillas for eigenphase `phi`:
/// `sin²(π 2^m δ) / (2^{2m} sin²(π δ))` with `δ = φ - j/2^m`, and 1 when
/// `δ` is an integer.
pub fn kernel(m: u32, phi: f64, j: u64) -> f64 {
    let size = (1u64 << m) as f64;
    let delta = phi - j as f64 / size;
    let delta = delta - delta.round();
    if delta.abs() < 1e-15 {
        return 1.0;
    }
    let num = (PI * size * delta).sin();
    let den = size * (PI * delta).sin();
    (num / den).powi(2)
}

/// Exact outcome distribution over `j in 0..2^m`.
pub fn phase_estimate_distribution(setup: &PhaseEstimationSetup) -> Vec<f64> {
    let size = 1u64 << setup.m;
    (0..size)
        .map(|j| setup.components.iter().map(|&(phi, a)| a * a * kernel(setup.m, phi, j)).sum())
        .collect()
}

/// Reusable sampler over the exact outcome table.
#[derive(Clone, Debug)]
pub struct PhaseSampler {
    table: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl PhaseSampler {
    pub fn new(setup: &PhaseEstimationSetup) -> Self {
        let table = phase_estimate_distribution(setup);
        let index = WeightedIndex::new(&table).expect("outcome table has positive mass");
        Self { table, index }
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.index.sample(rng) as u64
    }
}

pub fn sample_phase_estimate<R: Rng + ?Sized>(setup: &PhaseEstimationSetup, rng: &mut R) -> u64 {
    PhaseSampler::new(setup).sample(rng)
}
