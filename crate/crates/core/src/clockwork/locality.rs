use std::f64::consts::PI;

use serde::Serialize;

use super::{ClockError, ForwardOperator};

/// Locality the construction targets for `A = (F + F†)/2`.
pub const TARGET_LOCALITY: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TermSupport {
    /// 1-based term index.
    pub j: usize,
    pub label: String,
    /// Circuit wires of `V_j`.
    pub circuit_wires: Vec<usize>,
    /// Clock wires `j` and `j + 1` (a single wire when `s = 1`), 1-based.
    pub clock_wires: Vec<usize>,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalityReport {
    pub terms: Vec<TermSupport>,
    pub term_count: usize,
    pub max_support: usize,
    /// Set when some term touches more than four wires.
    pub exceeds_target: bool,
}

impl LocalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn locality_report(forward: &ForwardOperator) -> LocalityReport {
    let s = forward.s();
    let terms: Vec<TermSupport> = forward
        .circuit()
        .gates()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let j = i + 1;
            let mut clock_wires = vec![j, j % s + 1];
            clock_wires.sort_unstable();
            clock_wires.dedup();
            TermSupport {
                j,
                label: g.label.clone(),
                circuit_wires: g.support.clone(),
                support: g.support.len() + clock_wires.len(),
                clock_wires,
            }
        })
        .collect();
    let max_support = terms.iter().map(|t| t.support).max().unwrap_or(0);
    LocalityReport {
        term_count: terms.len(),
        exceeds_target: max_support > TARGET_LOCALITY,
        max_support,
        terms,
    }
}

/// Number of `k`-subsets of `n` wires, next to the cruder `n^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NormBound {
    pub binomial: u128,
    pub power: u128,
}

pub fn norm_bound(n: u64, k: u64) -> Result<NormBound, ClockError> {
    if k < 1 || k > n {
        return Err(ClockError::InvalidArgument(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    let overflow = || ClockError::InvalidArgument(format!("bound for n={n}, k={k} overflows u128"));
    let exp = u32::try_from(k).map_err(|_| overflow())?;
    let power = (n as u128).checked_pow(exp).ok_or_else(overflow)?;
    // C(n, i) = C(n, i-1) · (n - i + 1) / i stays integral at every step.
    let kk = k.min(n - k) as u128;
    let mut binomial: u128 = 1;
    for i in 1..=kk {
        binomial = binomial.checked_mul(n as u128 - i + 1).ok_or_else(overflow)? / i;
    }
    Ok(NormBound { binomial, power })
}

/// `t = π / bound`, so `‖A‖ t ≤ π` and `λ ↦ e^{-iλt}` is injective on the
/// spectrum.
pub fn choose_time_scale(norm_bound: f64) -> Result<f64, ClockError> {
    if norm_bound.is_nan() || norm_bound <= 0.0 || !norm_bound.is_finite() {
        return Err(ClockError::InvalidArgument(format!("norm bound {norm_bound} must be positive")));
    }
    Ok(PI / norm_bound)
}
