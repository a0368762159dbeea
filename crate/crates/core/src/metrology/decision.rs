use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use serde::Serialize;

use super::accuracy::SampleBatch;

/// Lower bound on the odd fraction when `f(x) = 1`.
pub const ODD_FRACTION_TRUE: f64 = 3.0 / 8.0;
/// Upper bound on the odd fraction when `f(x) = 0`.
pub const ODD_FRACTION_FALSE: f64 = 1.0 / 4.0;
/// Midpoint of the two bounds.
pub const THRESHOLD: f64 = 5.0 / 16.0;
/// Fewer surviving samples than this make a verdict inconclusive.
pub const MIN_FILTERED: usize = 32;
/// `3/8 - 1/4`.
pub const PROBABILITY_GAP: f64 = ODD_FRACTION_TRUE - ODD_FRACTION_FALSE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub j: u64,
    pub parity: u8,
}

/// Keeps outcomes in `[-1/√2, 1/√2]` and rounds `arccos` to the nearest
/// multiple of `π/(rs)`.
pub fn filter_round(value: f64, r: u64, s: u64) -> Option<GridPoint> {
    assert!(r >= 1 && s >= 1, "r and s are positive");
    if value.is_nan() || value.abs() > FRAC_1_SQRT_2 {
        return None;
    }
    let theta = value.clamp(-1.0, 1.0).acos();
    let j = (theta * (r * s) as f64 / PI).round() as u64;
    Some(GridPoint { j, parity: (j % 2) as u8 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionResult {
    pub verdict: u8,
    pub total: usize,
    pub filtered_count: usize,
    pub odd_count: usize,
    pub odd_fraction: f64,
    pub threshold: f64,
    pub confidence_bound: f64,
    pub inconclusive: bool,
}

/// `exp(-2 n (gap/2)^2)`: Hoeffding bound on the chance that the odd
/// fraction of `n` samples lands on the wrong side of the midpoint.
pub fn chernoff_confidence(filtered_count: usize, gap: f64) -> f64 {
    let half = gap / 2.0;
    (-2.0 * filtered_count as f64 * half * half).exp()
}

pub fn decide_values(values: &[f64], r: u64, s: u64) -> DecisionResult {
    let points: Vec<GridPoint> = values.iter().filter_map(|&v| filter_round(v, r, s)).collect();
    let filtered_count = points.len();
    let odd_count = points.iter().filter(|p| p.parity == 1).count();
    let odd_fraction = if filtered_count == 0 { 0.0 } else { odd_count as f64 / filtered_count as f64 };
    DecisionResult {
        verdict: u8::from(odd_fraction > THRESHOLD),
        total: values.len(),
        filtered_count,
        odd_count,
        odd_fraction,
        threshold: THRESHOLD,
        confidence_bound: chernoff_confidence(filtered_count, PROBABILITY_GAP),
        inconclusive: filtered_count < MIN_FILTERED,
    }
}

pub fn decide(batch: &SampleBatch, r: u64, s: u64) -> DecisionResult {
    decide_values(&batch.values, r, s)
}

/// `trial,raw_value,filtered,j,parity`; `filtered` is 1 when the outcome
/// was dropped.
pub fn batch_csv(values: &[f64], r: u64, s: u64) -> String {
    let mut out = String::from("trial,raw_value,filtered,j,parity\n");
    for (i, &v) in values.iter().enumerate() {
        match filter_round(v, r, s) {
            Some(p) => writeln!(out, "{i},{v:.17e},0,{},{}", p.j, p.parity),
            None => writeln!(out, "{i},{v:.17e},1,,"),
        }
        .expect("write to string");
    }
    out
}
