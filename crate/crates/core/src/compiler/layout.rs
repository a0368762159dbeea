use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CompileError;
use crate::rtm::{MachineConfig, RtmSpec, StateId, SymbolId};

/// Widest counter register (in binary digits) the builder will lay out.
pub const MAX_COUNTER_BITS: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Register {
    Mode,
    Head,
    TapeIndex,
    Acc,
    /// Tape cell, 1-based.
    Tape(usize),
    Solution,
    Counter,
    IdleCounter,
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Register::Mode => f.write_str("operation_mode"),
            Register::Head => f.write_str("head"),
            Register::TapeIndex => f.write_str("tape_index"),
            Register::Acc => f.write_str("ACC"),
            Register::Tape(i) => write!(f, "tape[{i}]"),
            Register::Solution => f.write_str("solution"),
            Register::Counter => f.write_str("counter"),
            Register::IdleCounter => f.write_str("idle_counter"),
        }
    }
}

/// One register packed inside a wire, `value = Σ component · stride`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub register: Register,
    pub dim: u32,
    pub stride: u32,
}

/// A qudit cell. Registers may be merged into a single wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Wire {
    pub id: usize,
    pub dim: u32,
    pub components: Vec<Component>,
}

impl Wire {
    pub fn label(&self) -> String {
        let names: Vec<String> = self.components.iter().map(|c| c.register.to_string()).collect();
        names.join("+")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Slot {
    wire: usize,
    stride: u32,
    dim: u32,
}

/// Assignment of registers to wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    wires: Vec<Wire>,
    slots: BTreeMap<Register, Slot>,
    m: u32,
    merged: bool,
}

/// Smallest `m` with `2^m >= size`.
pub fn ceil_log2(size: u128) -> u32 {
    if size <= 1 {
        0
    } else {
        128 - (size - 1).leading_zeros()
    }
}

/// `m` for a machine: `ceil(log2 D)` with `D = |Q| · N · |Σ| · |Σ|^N` the
/// number of basis states of the registers one machine step acts on.
pub fn machine_register_bits(spec: &RtmSpec) -> Result<u32, CompileError> {
    let d = spec
        .configuration_count()
        .and_then(|c| c.checked_mul(spec.symbol_count() as u128))
        .ok_or_else(|| CompileError::LayoutOverflow("machine register space overflows".into()))?;
    Ok(ceil_log2(d))
}

impl RegisterLayout {
    /// Builds a layout from explicit register groups, one wire per group.
    ///
    /// Groups of total dimension 1 carry no information; their registers are
    /// folded into the first wire of dimension at least 2.
    pub fn from_groups(groups: Vec<Vec<(Register, u32)>>, m: u32, merged: bool) -> Result<Self, CompileError> {
        let mut kept: Vec<Vec<(Register, u32)>> = Vec::new();
        let mut trivial: Vec<(Register, u32)> = Vec::new();
        for g in groups {
            if g.is_empty() {
                continue;
            }
            let dim: u64 = g.iter().map(|&(_, d)| d as u64).product();
            if g.iter().any(|&(_, d)| d == 0) {
                return Err(CompileError::LayoutOverflow("zero-dimensional register".into()));
            }
            if dim == 1 {
                trivial.extend(g);
            } else {
                kept.push(g);
            }
        }
        if kept.is_empty() {
            return Err(CompileError::LayoutOverflow("layout has no wire of dimension >= 2".into()));
        }
        kept[0].extend(trivial);

        let mut wires = Vec::with_capacity(kept.len());
        let mut slots = BTreeMap::new();
        for (id, g) in kept.into_iter().enumerate() {
            let mut stride: u64 = 1;
            let mut components = Vec::with_capacity(g.len());
            for (register, dim) in g {
                if slots.contains_key(&register) {
                    return Err(CompileError::LayoutOverflow(format!("{register} placed twice")));
                }
                let s = u32::try_from(stride)
                    .map_err(|_| CompileError::LayoutOverflow(format!("wire {id} too wide")))?;
                slots.insert(register, Slot { wire: id, stride: s, dim });
                components.push(Component { register, dim, stride: s });
                stride *= dim as u64;
            }
            let dim = u32::try_from(stride)
                .map_err(|_| CompileError::LayoutOverflow(format!("wire {id} too wide")))?;
            wires.push(Wire { id, dim, components });
        }
        Ok(Self { wires, slots, m, merged })
    }

    fn machine_groups(spec: &RtmSpec, wrapper: bool, merged: bool, m: u32) -> Vec<Vec<(Register, u32)>> {
        let q = spec.state_count() as u32;
        let n = spec.tape_cells();
        let sigma = spec.symbol_count() as u32;
        let res = spec.result_cell();
        let counter = 1u32 << (m + 1);
        let mut groups = Vec::new();
        if merged {
            let mut ctl = Vec::new();
            if wrapper {
                ctl.push((Register::Mode, 4));
            }
            ctl.push((Register::Head, q));
            if wrapper {
                ctl.push((Register::Solution, 2));
            }
            ctl.push((Register::Tape(res), sigma));
            groups.push(ctl);
            groups.push(vec![(Register::TapeIndex, n as u32), (Register::Acc, sigma)]);
            for i in (1..=n).filter(|&i| i != res) {
                groups.push(vec![(Register::Tape(i), sigma)]);
            }
            if wrapper {
                groups.push(vec![(Register::Counter, counter)]);
                groups.push(vec![(Register::IdleCounter, counter)]);
            }
        } else {
            if wrapper {
                groups.push(vec![(Register::Mode, 4)]);
            }
            groups.push(vec![(Register::Head, q)]);
            groups.push(vec![(Register::TapeIndex, n as u32)]);
            groups.push(vec![(Register::Acc, sigma)]);
            for i in 1..=n {
                groups.push(vec![(Register::Tape(i), sigma)]);
            }
            if wrapper {
                groups.push(vec![(Register::Solution, 2)]);
                groups.push(vec![(Register::Counter, counter)]);
                groups.push(vec![(Register::IdleCounter, counter)]);
            }
        }
        groups
    }

    /// Registers of one machine step: head, tape_index, ACC and the tape.
    pub fn machine(spec: &RtmSpec, merged: bool) -> Result<Self, CompileError> {
        let m = machine_register_bits(spec)?;
        Self::from_groups(Self::machine_groups(spec, false, merged, m), m, merged)
    }

    /// Machine registers plus operation_mode, solution, counter and
    /// idle_counter, the latter two with `m + 1` binary digits.
    pub fn wrapper(spec: &RtmSpec, merged: bool) -> Result<Self, CompileError> {
        let m = machine_register_bits(spec)?;
        if m + 1 > MAX_COUNTER_BITS {
            return Err(CompileError::LayoutOverflow(format!(
                "counter needs {} binary digits, at most {MAX_COUNTER_BITS} supported",
                m + 1
            )));
        }
        Self::from_groups(Self::machine_groups(spec, true, merged, m), m, merged)
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn wire_count(&self) -> usize {
        self.wires.len()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn merged(&self) -> bool {
        self.merged
    }

    /// `2^{m+1} - 1`, the all-ones counter value.
    pub fn counter_max(&self) -> u32 {
        self.dim_of(Register::Counter).map(|d| d - 1).unwrap_or(0)
    }

    pub fn has(&self, register: Register) -> bool {
        self.slots.contains_key(&register)
    }

    pub fn wire_of(&self, register: Register) -> Option<usize> {
        self.slots.get(&register).map(|s| s.wire)
    }

    pub fn dim_of(&self, register: Register) -> Option<u32> {
        self.slots.get(&register).map(|s| s.dim)
    }

    pub fn registers(&self) -> impl Iterator<Item = Register> + '_ {
        self.slots.keys().copied()
    }

    /// Number of basis states of the whole layout, if it fits in `u128`.
    pub fn space_size(&self) -> Option<u128> {
        self.wires
            .iter()
            .try_fold(1u128, |acc, w| acc.checked_mul(w.dim as u128))
    }

    pub fn zero_state(&self) -> BasisState {
        BasisState {
            values: vec![0; self.wires.len()],
        }
    }

    pub fn get(&self, state: &BasisState, register: Register) -> u32 {
        let s = self.slots[&register];
        (state.values[s.wire] / s.stride) % s.dim
    }

    pub fn set(&self, state: &mut BasisState, register: Register, value: u32) {
        let s = self.slots[&register];
        assert!(value < s.dim, "{register} value {value} out of range {}", s.dim);
        let old = (state.values[s.wire] / s.stride) % s.dim;
        state.values[s.wire] = state.values[s.wire] - old * s.stride + value * s.stride;
    }

    pub fn validate(&self, state: &BasisState) -> Result<(), CompileError> {
        if state.values.len() != self.wires.len() {
            return Err(CompileError::DimensionMismatch(format!(
                "state has {} wires, layout has {}",
                state.values.len(),
                self.wires.len()
            )));
        }
        for (v, w) in state.values.iter().zip(&self.wires) {
            if *v >= w.dim {
                return Err(CompileError::DimensionMismatch(format!(
                    "wire {} value {v} exceeds dimension {}",
                    w.id, w.dim
                )));
            }
        }
        Ok(())
    }

    /// Mixed-radix index over all wires (wire 0 least significant).
    pub fn packed(&self, state: &BasisState) -> Option<u128> {
        let mut idx = 0u128;
        for (v, w) in state.values.iter().zip(&self.wires).rev() {
            idx = idx.checked_mul(w.dim as u128)?.checked_add(*v as u128)?;
        }
        Some(idx)
    }

    pub fn unpack(&self, mut index: u128) -> BasisState {
        let values = self
            .wires
            .iter()
            .map(|w| {
                let v = (index % w.dim as u128) as u32;
                index /= w.dim as u128;
                v
            })
            .collect();
        BasisState { values }
    }

    /// Writes a machine configuration into head, tape_index and tape.
    pub fn load_config(&self, state: &mut BasisState, config: &MachineConfig) {
        self.set(state, Register::Head, config.head.0 as u32);
        self.set(state, Register::TapeIndex, (config.tape_index - 1) as u32);
        for (i, s) in config.tape.iter().enumerate() {
            self.set(state, Register::Tape(i + 1), s.0 as u32);
        }
    }

    pub fn read_config(&self, state: &BasisState, tape_cells: usize) -> MachineConfig {
        MachineConfig {
            head: StateId(self.get(state, Register::Head) as usize),
            tape_index: self.get(state, Register::TapeIndex) as usize + 1,
            tape: (1..=tape_cells)
                .map(|i| SymbolId(self.get(state, Register::Tape(i)) as usize))
                .collect(),
            steps: 0,
        }
    }

    /// Register values keyed by name, for reports and debugging.
    pub fn assignment(&self, state: &BasisState) -> BTreeMap<Register, u32> {
        self.slots.keys().map(|&r| (r, self.get(state, r))).collect()
    }
}

/// Computational basis state: one local value per wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BasisState {
    pub values: Vec<u32>,
}
