use serde::{Deserialize, Serialize};

use super::layout::{BasisState, Register, RegisterLayout};
use super::CompileError;

/// Largest local table a gate may carry.
pub const MAX_GATE_TABLE: u64 = 1 << 26;

/// A basis permutation on the product of its support wires.
///
/// Local index is mixed radix over `support` with the first wire least
/// significant. `table[i]` is the image of local index `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermGate {
    pub label: String,
    pub support: Vec<usize>,
    pub dims: Vec<u32>,
    pub table: Vec<u32>,
}

/// Register values seen by a gate's local rule.
#[derive(Clone, Debug)]
pub struct LocalRegs {
    entries: Vec<(Register, u32)>,
}

impl LocalRegs {
    pub fn get(&self, register: Register) -> u32 {
        self.entries
            .iter()
            .find(|(r, _)| *r == register)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| panic!("{register} outside gate support"))
    }

    pub fn set(&mut self, register: Register, value: u32) {
        let slot = self
            .entries
            .iter_mut()
            .find(|(r, _)| *r == register)
            .unwrap_or_else(|| panic!("{register} outside gate support"));
        slot.1 = value;
    }
}

fn local_size(dims: &[u32]) -> u64 {
    dims.iter().map(|&d| d as u64).product()
}

impl PermGate {
    /// Wraps an explicit table, checking it is a bijection.
    pub fn from_table(
        label: impl Into<String>,
        support: Vec<usize>,
        dims: Vec<u32>,
        table: Vec<u32>,
    ) -> Result<Self, CompileError> {
        let label = label.into();
        if support.len() != dims.len() || support.is_empty() {
            return Err(CompileError::DimensionMismatch(format!(
                "gate {label}: support and dims disagree"
            )));
        }
        let size = local_size(&dims);
        if size != table.len() as u64 {
            return Err(CompileError::DimensionMismatch(format!(
                "gate {label}: table has {} entries, support spans {size}",
                table.len()
            )));
        }
        let mut seen = vec![false; table.len()];
        for &t in &table {
            let t = t as usize;
            if t >= seen.len() || std::mem::replace(&mut seen[t], true) {
                return Err(CompileError::NotBijective { label });
            }
        }
        Ok(Self { label, support, dims, table })
    }

    /// Tabulates `rule` over every local basis state of the wires holding
    /// `registers`. Registers sharing those wires are visible to `rule` too.
    pub fn from_rule(
        label: impl Into<String>,
        layout: &RegisterLayout,
        registers: &[Register],
        rule: impl Fn(&mut LocalRegs),
    ) -> Result<Self, CompileError> {
        let label = label.into();
        let mut support: Vec<usize> = registers
            .iter()
            .map(|&r| {
                layout
                    .wire_of(r)
                    .ok_or_else(|| CompileError::DimensionMismatch(format!("gate {label}: {r} not in layout")))
            })
            .collect::<Result<_, _>>()?;
        support.sort_unstable();
        support.dedup();
        let wires = layout.wires();
        let dims: Vec<u32> = support.iter().map(|&w| wires[w].dim).collect();
        let size = local_size(&dims);
        if size > MAX_GATE_TABLE {
            return Err(CompileError::GateTooLarge { label, size });
        }

        let mut table = Vec::with_capacity(size as usize);
        let mut wire_vals = vec![0u32; support.len()];
        for index in 0..size {
            let mut rest = index;
            for (k, &d) in dims.iter().enumerate() {
                wire_vals[k] = (rest % d as u64) as u32;
                rest /= d as u64;
            }
            let mut regs = LocalRegs {
                entries: Vec::new(),
            };
            for (k, &w) in support.iter().enumerate() {
                for c in &wires[w].components {
                    regs.entries.push((c.register, (wire_vals[k] / c.stride) % c.dim));
                }
            }
            rule(&mut regs);
            let mut image: u64 = 0;
            let mut scale: u64 = 1;
            let mut e = regs.entries.iter();
            for (k, &w) in support.iter().enumerate() {
                let mut v = 0u32;
                for c in &wires[w].components {
                    let &(r, val) = e.next().expect("entry per component");
                    if val >= c.dim {
                        return Err(CompileError::ValueOutOfRange { label, register: r.to_string() });
                    }
                    v += val * c.stride;
                }
                image += v as u64 * scale;
                scale *= dims[k] as u64;
            }
            table.push(image as u32);
        }
        Self::from_table(label, support, dims, table)
    }

    pub fn inverse(&self) -> PermGate {
        let mut table = vec![0u32; self.table.len()];
        for (i, &t) in self.table.iter().enumerate() {
            table[t as usize] = i as u32;
        }
        PermGate {
            label: format!("{}^-1", self.label),
            support: self.support.clone(),
            dims: self.dims.clone(),
            table,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &t)| i as u32 == t)
    }

    fn local_index(&self, state: &BasisState) -> usize {
        let mut idx = 0usize;
        for (&w, &d) in self.support.iter().zip(&self.dims).rev() {
            idx = idx * d as usize + state.values[w] as usize;
        }
        idx
    }

    pub fn apply(&self, state: &mut BasisState) {
        let mut image = self.table[self.local_index(state)] as usize;
        for (&w, &d) in self.support.iter().zip(&self.dims) {
            state.values[w] = (image % d as usize) as u32;
            image /= d as usize;
        }
    }

    pub fn apply_inverse_slow(&self, state: &mut BasisState) {
        let target = self.local_index(state) as u32;
        let pre = self.table.iter().position(|&t| t == target).expect("bijection");
        let mut image = pre;
        for (&w, &d) in self.support.iter().zip(&self.dims) {
            state.values[w] = (image % d as usize) as u32;
            image /= d as usize;
        }
    }
}
