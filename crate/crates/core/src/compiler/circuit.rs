use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::gate::PermGate;
use super::layout::{BasisState, Register, RegisterLayout};
use super::CompileError;

/// Dump format tag; bump when the JSON shape changes.
pub const DUMP_FORMAT: &str = "orbitmeter-circuit/1";

/// Header note recording how mode 11 treats idle_counter.
pub const IDLE_COUNTER_NOTE: &str =
    "mode 11 leaves idle_counter unchanged; it is already 0 when mode 11 is entered";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    Step,
    Wrapper,
    Custom,
}

/// An ordered list of permutation gates over a register layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<PermGate>,
    kind: CircuitKind,
    notes: Vec<String>,
}

impl Circuit {
    /// Checks every gate lies on layout wires with matching dimensions and
    /// that there is at least one gate.
    pub fn new(
        layout: RegisterLayout,
        gates: Vec<PermGate>,
        kind: CircuitKind,
        notes: Vec<String>,
    ) -> Result<Self, CompileError> {
        if gates.is_empty() {
            return Err(CompileError::EmptyCircuit);
        }
        for g in &gates {
            for (&w, &d) in g.support.iter().zip(&g.dims) {
                match layout.wires().get(w) {
                    Some(wire) if wire.dim == d => {}
                    _ => {
                        return Err(CompileError::DimensionMismatch(format!(
                            "gate {} uses wire {w} with dimension {d}",
                            g.label
                        )))
                    }
                }
            }
            if g.support.windows(2).any(|p| p[0] >= p[1]) {
                return Err(CompileError::DimensionMismatch(format!(
                    "gate {} support is not strictly increasing",
                    g.label
                )));
            }
        }
        Ok(Self { layout, gates, kind, notes })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[PermGate] {
        &self.gates
    }

    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Gate count `s`.
    pub fn s(&self) -> usize {
        self.gates.len()
    }

    /// Largest gate support, in wires.
    pub fn max_support(&self) -> usize {
        self.gates.iter().map(|g| g.support.len()).max().unwrap_or(0)
    }

    /// The inverse circuit: inverted gates in reverse order.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            layout: self.layout.clone(),
            gates: self.gates.iter().rev().map(PermGate::inverse).collect(),
            kind: CircuitKind::Custom,
            notes: self.notes.clone(),
        }
    }

    pub fn apply_in_place(&self, state: &mut BasisState) {
        apply_gates(&self.gates, state);
    }

    pub fn to_dump(&self) -> CircuitDump {
        CircuitDump {
            format: DUMP_FORMAT.to_string(),
            kind: self.kind,
            m: self.layout.m(),
            counter_max: self.layout.counter_max(),
            merged: self.layout.merged(),
            s: self.s(),
            notes: self.notes.clone(),
            wires: self
                .layout
                .wires()
                .iter()
                .map(|w| DumpWire {
                    id: w.id,
                    dim: w.dim,
                    registers: w.components.iter().map(|c| (c.register, c.dim)).collect(),
                })
                .collect(),
            gates: self.gates.clone(),
        }
    }

    /// Deterministic JSON; identical circuits give identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_dump()).expect("dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        let dump: CircuitDump =
            serde_json::from_str(text).map_err(|e| CompileError::Dump(e.to_string()))?;
        if dump.format != DUMP_FORMAT {
            return Err(CompileError::Dump(format!("unknown format {}", dump.format)));
        }
        let groups = dump.wires.into_iter().map(|w| w.registers).collect();
        let layout = RegisterLayout::from_groups(groups, dump.m, dump.merged)?;
        let gates = dump
            .gates
            .into_iter()
            .map(|g| PermGate::from_table(g.label, g.support, g.dims, g.table))
            .collect::<Result<Vec<_>, _>>()?;
        Circuit::new(layout, gates, dump.kind, dump.notes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpWire {
    pub id: usize,
    pub dim: u32,
    pub registers: Vec<(Register, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDump {
    pub format: String,
    pub kind: CircuitKind,
    pub m: u32,
    pub counter_max: u32,
    pub merged: bool,
    pub s: usize,
    pub notes: Vec<String>,
    pub wires: Vec<DumpWire>,
    pub gates: Vec<PermGate>,
}

pub fn apply_gates(gates: &[PermGate], state: &mut BasisState) {
    for g in gates {
        g.apply(state);
    }
}

pub fn apply_circuit(circuit: &Circuit, state: &BasisState) -> Result<BasisState, CompileError> {
    circuit.layout.validate(state)?;
    let mut out = state.clone();
    circuit.apply_in_place(&mut out);
    Ok(out)
}

/// Smallest `r >= 1` with `V^r(initial) = initial`.
pub fn circuit_orbit_length(
    circuit: &Circuit,
    initial: &BasisState,
    budget: u64,
) -> Result<u64, CompileError> {
    circuit.layout.validate(initial)?;
    let mut state = initial.clone();
    for r in 1..=budget {
        circuit.apply_in_place(&mut state);
        if state == *initial {
            return Ok(r);
        }
    }
    Err(CompileError::BudgetExhausted { budget })
}

/// The orbit of `initial` under the circuit, starting with `initial`.
pub fn circuit_orbit(
    circuit: &Circuit,
    initial: &BasisState,
    budget: u64,
) -> Result<Vec<BasisState>, CompileError> {
    circuit.layout.validate(initial)?;
    let mut orbit = vec![initial.clone()];
    let mut state = initial.clone();
    for _ in 0..budget {
        circuit.apply_in_place(&mut state);
        if state == *initial {
            return Ok(orbit);
        }
        orbit.push(state.clone());
    }
    Err(CompileError::BudgetExhausted { budget })
}

/// Checks the circuit permutes the whole register space by exhaustive
/// enumeration. Returns `None` when the space exceeds `cap`.
pub fn circuit_is_bijective(circuit: &Circuit, cap: u128) -> Option<bool> {
    let size = circuit.layout.space_size().filter(|&n| n <= cap)?;
    let mut seen = HashSet::with_capacity(size as usize);
    for idx in 0..size {
        let mut s = circuit.layout.unpack(idx);
        circuit.apply_in_place(&mut s);
        let image = circuit.layout.packed(&s)?;
        if !seen.insert(image) {
            return Some(false);
        }
    }
    Some(true)
}
