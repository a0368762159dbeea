//! Compilation of a reversible machine into permutation-gate circuits: the
//! one-step circuit `U` and the self-looping wrapper `V`.

mod build;
mod circuit;
mod gate;
mod layout;

use thiserror::Error;

pub use build::{
    build_moving_gate, build_rw_gates, build_step_circuit, build_step_circuit_with,
    build_wrapper_circuit, build_wrapper_circuit_with, ensure_compilable, expected_orbit_length,
    mode, wrapper_initial_state, MachineTables,
};
pub use circuit::{
    apply_circuit, apply_gates, circuit_is_bijective, circuit_orbit, circuit_orbit_length, Circuit,
    CircuitDump, CircuitKind, DumpWire, DUMP_FORMAT, IDLE_COUNTER_NOTE,
};
pub use gate::{LocalRegs, PermGate, MAX_GATE_TABLE};
pub use layout::{
    ceil_log2, machine_register_bits, BasisState, Component, Register, RegisterLayout, Wire,
    MAX_COUNTER_BITS,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("machine is not reversible: {}", .0.join("; "))]
    NotReversible(Vec<String>),
    #[error("machine is not in compilable normal form: {}", .0.join("; "))]
    NormalForm(Vec<String>),
    #[error("gate {label} is not a bijection")]
    NotBijective { label: String },
    #[error("gate {label} writes an out-of-range value to {register}")]
    ValueOutOfRange { label: String, register: String },
    #[error("gate {label} has {size} local states")]
    GateTooLarge { label: String, size: u64 },
    #[error("layout overflow: {0}")]
    LayoutOverflow(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("circuit has no gates")]
    EmptyCircuit,
    #[error("no recurrence within {budget} applications")]
    BudgetExhausted { budget: u64 },
    #[error("bad circuit dump: {0}")]
    Dump(String),
}
