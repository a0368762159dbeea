//! Forward-time operator on circuit × one-hot clock, its orbit through the
//! initial state, and the spectrum of the symmetrized shift on that orbit.

mod dense;
mod locality;
mod spectral;

use std::collections::HashMap;

use thiserror::Error;

use crate::compiler::{BasisState, Circuit, CompileError, Register};

pub use dense::{dense_orbit_oracle, jacobi_eigenvalues, symmetric_eigenvalues, symmetrized_shift, DENSE_CAP};
pub use locality::{choose_time_scale, locality_report, norm_bound, LocalityReport, NormBound, TermSupport};
pub use spectral::{spectral_gap, spectral_model, SpectralEntry, SpectralModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("invalid clock pattern: {0}")]
    InvalidClock(String),
    #[error("orbit must start at clock position 1 from |x>|0...0>: {0}")]
    NotInitial(String),
    #[error("no recurrence within {budget} applications of F")]
    BudgetExhausted { budget: u64 },
    #[error("orbit revisits step {first} at step {second} before returning to the start")]
    Repeated { first: u64, second: u64 },
    #[error("dimension {d} exceeds the cap of {cap}")]
    DimensionCap { d: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error(transparent)]
    Circuit(#[from] CompileError),
}

/// A circuit state together with the position of the clock excitation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClockedState {
    pub circuit_state: BasisState,
    /// 1-based position of the single excited clock wire.
    pub clock_pos: usize,
}

impl ClockedState {
    pub fn new(circuit_state: BasisState, clock_pos: usize) -> Self {
        Self { circuit_state, clock_pos }
    }

    /// Decodes a clock register given as one bit per clock wire.
    pub fn from_clock_bits(circuit_state: BasisState, bits: &[u8]) -> Result<Self, ClockError> {
        if bits.iter().any(|&b| b > 1) {
            return Err(ClockError::InvalidClock("clock wires are two-level".into()));
        }
        let hot: Vec<usize> = bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i + 1).collect();
        match hot.as_slice() {
            [pos] => Ok(Self { circuit_state, clock_pos: *pos }),
            _ => Err(ClockError::InvalidClock(format!("{} excited wires", hot.len()))),
        }
    }

    pub fn clock_bits(&self, s: usize) -> Vec<u8> {
        (1..=s).map(|i| u8::from(i == self.clock_pos)).collect()
    }
}

/// `F = Σ_j V_j ⊗ |1⟩⟨0|_{j+1} ⊗ |0⟩⟨1|_j`, acting on basis states.
#[derive(Clone, Debug)]
pub struct ForwardOperator {
    circuit: Circuit,
}

impl ForwardOperator {
    pub fn new(circuit: Circuit) -> Self {
        Self { circuit }
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn s(&self) -> usize {
        self.circuit.s()
    }

    /// Number of two-level clock wires.
    pub fn clock_wires(&self) -> usize {
        self.s()
    }

    fn check(&self, state: &ClockedState) -> Result<(), ClockError> {
        if state.clock_pos == 0 || state.clock_pos > self.s() {
            return Err(ClockError::InvalidClock(format!(
                "position {} outside 1..={}",
                state.clock_pos,
                self.s()
            )));
        }
        self.circuit.layout().validate(&state.circuit_state)?;
        Ok(())
    }

    fn step(&self, state: &mut ClockedState) {
        self.circuit.gates()[state.clock_pos - 1].apply(&mut state.circuit_state);
        state.clock_pos = state.clock_pos % self.s() + 1;
    }

    fn unstep(&self, state: &mut ClockedState) {
        let s = self.s();
        state.clock_pos = (state.clock_pos + s - 2) % s + 1;
        let gate = &self.circuit.gates()[state.clock_pos - 1];
        let inv = gate.inverse();
        inv.apply(&mut state.circuit_state);
    }

    /// Applies `V_{clock_pos}` and advances the clock, `s` wrapping to 1.
    pub fn apply_forward(&self, state: &ClockedState) -> Result<ClockedState, ClockError> {
        self.check(state)?;
        let mut out = state.clone();
        self.step(&mut out);
        Ok(out)
    }

    /// `F†`: moves the clock back and undoes the gate it lands on.
    pub fn apply_backward(&self, state: &ClockedState) -> Result<ClockedState, ClockError> {
        self.check(state)?;
        let mut out = state.clone();
        self.unstep(&mut out);
        Ok(out)
    }
}

/// The cycle of `F` through an initial state.
#[derive(Clone, Debug)]
pub struct Orbit<'a> {
    forward: &'a ForwardOperator,
    pub initial: ClockedState,
    pub d: u64,
}

impl<'a> Orbit<'a> {
    /// The `d` orbit states in order, starting with the initial state.
    pub fn states(&self) -> impl Iterator<Item = ClockedState> + 'a {
        let forward = self.forward;
        let mut cur = self.initial.clone();
        (0..self.d).map(move |_| {
            let out = cur.clone();
            forward.step(&mut cur);
            out
        })
    }
}

/// Registers that must be zero in `|x⟩|0…0⟩`.
const ANCILLAS: [Register; 5] = [
    Register::Acc,
    Register::Mode,
    Register::Solution,
    Register::Counter,
    Register::IdleCounter,
];

/// Traverses the cycle of `F` through `initial`, checking every visited
/// state is new until the start recurs.
pub fn compute_orbit<'a>(
    forward: &'a ForwardOperator,
    initial: &ClockedState,
    budget: u64,
) -> Result<Orbit<'a>, ClockError> {
    forward.check(initial)?;
    if initial.clock_pos != 1 {
        return Err(ClockError::NotInitial(format!("clock at {}", initial.clock_pos)));
    }
    let layout = forward.circuit.layout();
    for r in ANCILLAS.into_iter().filter(|&r| layout.has(r)) {
        if layout.get(&initial.circuit_state, r) != 0 {
            return Err(ClockError::NotInitial(format!("{r} is not zero")));
        }
    }

    let mut index_of: HashMap<ClockedState, u64> = HashMap::new();
    let mut cur = initial.clone();
    for step in 0..budget {
        if let Some(&first) = index_of.get(&cur) {
            return Err(ClockError::Repeated { first, second: step });
        }
        index_of.insert(cur.clone(), step);
        forward.step(&mut cur);
        if cur == *initial {
            return Ok(Orbit { forward, initial: initial.clone(), d: step + 1 });
        }
    }
    Err(ClockError::BudgetExhausted { budget })
}
