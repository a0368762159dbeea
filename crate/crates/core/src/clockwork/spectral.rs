use std::f64::consts::PI;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

/// One distinct eigenvalue of `(C + Cᵀ)/2` for the `d`-cycle shift `C`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEntry {
    pub j: u64,
    pub eigenvalue: f64,
    pub multiplicity: u8,
    /// Probability of this outcome when measuring the orbit's initial state.
    #[serde(serialize_with = "ratio_as_string")]
    pub probability: Ratio<u64>,
}

fn ratio_as_string<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralModel {
    pub d: u64,
    pub entries: Vec<SpectralEntry>,
}

/// `cos(2πj/d)` for `j = 0..=d/2`. `j = 0` and, for even `d`, `j = d/2`
/// are simple; every other value is doubly degenerate.
pub fn spectral_model(d: u64) -> SpectralModel {
    assert!(d >= 1, "orbit length is at least 1");
    let entries = (0..=d / 2)
        .map(|j| {
            let multiplicity = if j == 0 || 2 * j == d { 1 } else { 2 };
            SpectralEntry {
                j,
                eigenvalue: cos_2pi_frac(j, d),
                multiplicity,
                probability: Ratio::new(multiplicity as u64, d),
            }
        })
        .collect();
    SpectralModel { d, entries }
}

/// `cos(2π j/d)` with the argument reduced to `[0, π/4]` first so values
/// such as `cos(π/2)` come out exactly 0.
fn cos_2pi_frac(j: u64, d: u64) -> f64 {
    // Work in units of 1/(8d) of a full turn.
    let t = (8 * j) % (8 * d);
    let t = if t > 4 * d { 8 * d - t } else { t };
    let angle = |num: u64| 2.0 * PI * num as f64 / (8 * d) as f64;
    if t <= d {
        angle(t).cos()
    } else if t <= 2 * d {
        angle(2 * d - t).sin()
    } else if t <= 3 * d {
        -angle(t - 2 * d).sin()
    } else {
        -angle(4 * d - t).cos()
    }
}

impl SpectralModel {
    pub fn probability_sum(&self) -> Ratio<u64> {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Eigenvalues with multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.eigenvalue, e.multiplicity as usize))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,eigenvalue,multiplicity,probability\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{:.17e},{},{}/{}",
                e.j,
                e.eigenvalue,
                e.multiplicity,
                e.probability.numer(),
                e.probability.denom()
            )
            .expect("write to string");
        }
        out
    }
}

/// `1 - cos(2π/d)`, evaluated as `2 sin²(π/d)` to avoid cancellation.
pub fn spectral_gap(d: u64) -> f64 {
    let s = (PI / d as f64).sin();
    2.0 * s * s
}
