use super::circuit::{Circuit, CircuitKind, IDLE_COUNTER_NOTE};
use super::gate::PermGate;
use super::layout::{BasisState, Register, RegisterLayout};
use super::CompileError;
use crate::rtm::{check_reversibility, wrap_index, MachineConfig, RtmSpec, SymbolId, Transition};

/// Operation modes, encoded as the value of the `operation_mode` register.
pub mod mode {
    pub const FORWARD: u32 = 0b00;
    pub const IDLE_UP: u32 = 0b01;
    pub const IDLE_DOWN: u32 = 0b10;
    pub const BACKWARD: u32 = 0b11;
}

/// Completes a partial injection on `0..n` to a permutation.
///
/// Each maximal chain `x0 -> x1 -> ... -> xk` of the partial map is closed
/// by sending `xk` back to `x0`; points outside every chain are fixed.
fn close_chains(label: &str, partial: &[Option<usize>]) -> Result<Vec<u32>, CompileError> {
    let n = partial.len();
    let mut has_pre = vec![false; n];
    for &y in partial.iter().flatten() {
        if std::mem::replace(&mut has_pre[y], true) {
            return Err(CompileError::NotBijective { label: label.to_string() });
        }
    }
    let mut table: Vec<u32> = (0..n as u32).collect();
    for (x, img) in partial.iter().enumerate() {
        if let Some(y) = *img {
            table[x] = y as u32;
        }
    }
    for start in (0..n).filter(|&x| partial[x].is_some() && !has_pre[x]) {
        let mut end = start;
        while let Some(next) = partial[end] {
            end = next;
        }
        table[end] = start as u32;
    }
    // Cycles of the partial map are already closed; anything else left
    // unassigned would break bijectivity.
    let mut seen = vec![false; n];
    for &t in &table {
        if std::mem::replace(&mut seen[t as usize], true) {
            return Err(CompileError::NotBijective { label: label.to_string() });
        }
    }
    Ok(table)
}

/// Permutation tables of one moving step (on `head × tape_index`) and one
/// read-write step (on `head × ACC`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineTables {
    pub cells: usize,
    pub symbols: usize,
    /// Indexed by `head · N + (tape_index - 1)`.
    pub moving: Vec<u32>,
    /// Indexed by `head · |Σ| + acc`.
    pub rw: Vec<u32>,
}

impl MachineTables {
    pub fn new(spec: &RtmSpec) -> Result<Self, CompileError> {
        let n = spec.tape_cells();
        let sigma = spec.symbol_count();
        let q = spec.state_count();
        let mut moving = vec![None; q * n];
        let mut rw = vec![None; q * sigma];
        for t in spec.transitions() {
            match *t {
                Transition::Moving { from, to, dir } => {
                    for i in 1..=n {
                        let j = wrap_index(i, dir.offset(), n);
                        moving[from.0 * n + i - 1] = Some(to.0 * n + j - 1);
                    }
                }
                Transition::ReadWrite { from, read, to, write } => {
                    rw[from.0 * sigma + read.0] = Some(to.0 * sigma + write.0);
                }
            }
        }
        Ok(Self {
            cells: n,
            symbols: sigma,
            moving: close_chains("U_moving", &moving)?,
            rw: close_chains("W_rw", &rw)?,
        })
    }

    pub fn move_image(&self, head: u32, index0: u32) -> (u32, u32) {
        let n = self.cells as u32;
        let v = self.moving[(head * n + index0) as usize];
        (v / n, v % n)
    }

    pub fn rw_image(&self, head: u32, acc: u32) -> (u32, u32) {
        let s = self.symbols as u32;
        let v = self.rw[(head * s + acc) as usize];
        (v / s, v % s)
    }

    fn inverse(table: &[u32]) -> Vec<u32> {
        let mut inv = vec![0u32; table.len()];
        for (i, &t) in table.iter().enumerate() {
            inv[t as usize] = i as u32;
        }
        inv
    }

    pub fn inverted(&self) -> Self {
        Self {
            cells: self.cells,
            symbols: self.symbols,
            moving: Self::inverse(&self.moving),
            rw: Self::inverse(&self.rw),
        }
    }
}

/// Which operation modes trigger a controlled machine gate.
#[derive(Clone, Copy)]
enum Control {
    Always,
    Mode(u32),
}

impl Control {
    fn active(self, regs: &super::gate::LocalRegs) -> bool {
        match self {
            Control::Always => true,
            Control::Mode(m) => regs.get(Register::Mode) == m,
        }
    }

    fn registers(self, base: &[Register]) -> Vec<Register> {
        let mut v = base.to_vec();
        if let Control::Mode(_) = self {
            v.insert(0, Register::Mode);
        }
        v
    }
}

fn moving_gate(
    label: &str,
    tables: &MachineTables,
    layout: &RegisterLayout,
    control: Control,
) -> Result<PermGate, CompileError> {
    PermGate::from_rule(
        label,
        layout,
        &control.registers(&[Register::Head, Register::TapeIndex]),
        |r| {
            if control.active(r) {
                let (h, i) = tables.move_image(r.get(Register::Head), r.get(Register::TapeIndex));
                r.set(Register::Head, h);
                r.set(Register::TapeIndex, i);
            }
        },
    )
}

fn swap_wall(layout: &RegisterLayout, cell: usize) -> Result<PermGate, CompileError> {
    let tape = Register::Tape(cell);
    PermGate::from_rule(
        format!("L{cell} SWAP(ACC,tape[{cell}])"),
        layout,
        &[Register::TapeIndex, Register::Acc, tape],
        |r| {
            if r.get(Register::TapeIndex) as usize == cell - 1 {
                let (a, t) = (r.get(Register::Acc), r.get(tape));
                r.set(Register::Acc, t);
                r.set(tape, a);
            }
        },
    )
}

/// `U_moving` on `{head, tape_index}`; read-write and final head states are
/// fixed unless the chain completion needs them.
pub fn build_moving_gate(spec: &RtmSpec, layout: &RegisterLayout) -> Result<PermGate, CompileError> {
    let tables = MachineTables::new(spec)?;
    moving_gate("U_moving", &tables, layout, Control::Always)
}

/// The swap wall, `W_r/w` on `{head, ACC}`, and the swap wall again.
pub fn build_rw_gates(spec: &RtmSpec, layout: &RegisterLayout) -> Result<Vec<PermGate>, CompileError> {
    let tables = MachineTables::new(spec)?;
    let n = spec.tape_cells();
    let mut gates: Vec<PermGate> = (1..=n).map(|i| swap_wall(layout, i)).collect::<Result<_, _>>()?;
    gates.push(PermGate::from_rule("W_rw", layout, &[Register::Head, Register::Acc], |r| {
        let (h, a) = tables.rw_image(r.get(Register::Head), r.get(Register::Acc));
        r.set(Register::Head, h);
        r.set(Register::Acc, a);
    })?);
    for i in 1..=n {
        gates.push(swap_wall(layout, i)?);
    }
    Ok(gates)
}

/// Rejects specs that are not reversible or not in compilable normal form.
pub fn ensure_compilable(spec: &RtmSpec) -> Result<(), CompileError> {
    let report = check_reversibility(spec);
    if !report.is_reversible() {
        return Err(CompileError::NotReversible(
            report.violations.iter().map(ToString::to_string).collect(),
        ));
    }
    if !report.normal_form.is_empty() {
        return Err(CompileError::NormalForm(
            report.normal_form.iter().map(ToString::to_string).collect(),
        ));
    }
    Ok(())
}

/// `U = U_rw · U_moving` with cell merging.
pub fn build_step_circuit(spec: &RtmSpec) -> Result<Circuit, CompileError> {
    build_step_circuit_with(spec, true)
}

pub fn build_step_circuit_with(spec: &RtmSpec, merged: bool) -> Result<Circuit, CompileError> {
    ensure_compilable(spec)?;
    let layout = RegisterLayout::machine(spec, merged)?;
    let mut gates = vec![build_moving_gate(spec, &layout)?];
    gates.extend(build_rw_gates(spec, &layout)?);
    Circuit::new(layout, gates, CircuitKind::Step, Vec::new())
}

/// The self-looping wrapper `V` with cell merging.
pub fn build_wrapper_circuit(spec: &RtmSpec) -> Result<Circuit, CompileError> {
    build_wrapper_circuit_with(spec, true)
}

/// Gate order inside one application of `V`:
///
/// 1. `U` in mode 00 and `U^-1` in mode 11 (`U_moving`, wall, combined
///    `W_rw`, wall, `U_moving^-1`);
/// 2. counter `+1` in modes 00/01, `-1` in modes 10/11;
/// 3. idle_counter `+1` in mode 01, `-1` in mode 10;
/// 4. solution flip in mode 01 when counter is all ones and the result cell
///    accepts;
/// 5. mode changes 00↔01 (idle zero, head final), 01↔10 (counter all ones),
///    11↔00 (counter zero), 10↔11 (idle zero, head final).
///
/// Each mode change is a swap of two mode values, so the whole step is a
/// permutation. Starting from mode 00 with zero counters, the run spends
/// `max(T, 1)` steps in mode 00, `K - max(T, 1)` in each of modes 01 and
/// 10, and `max(T, 1)` in mode 11, where `T` is the halting time and
/// `K = 2^{m+1} - 1`.
pub fn build_wrapper_circuit_with(spec: &RtmSpec, merged: bool) -> Result<Circuit, CompileError> {
    ensure_compilable(spec)?;
    let layout = RegisterLayout::wrapper(spec, merged)?;
    let tables = MachineTables::new(spec)?;
    let inverse = tables.inverted();
    let n = spec.tape_cells();
    let k = layout.counter_max();
    let dim = k + 1;
    let finals: Vec<bool> = spec.states().map(|s| spec.is_final(s)).collect();
    let accept = spec.accept_symbol().map(|a| a.0 as u32);
    let res = Register::Tape(spec.result_cell());

    let mut gates = vec![moving_gate("MOVE[00]", &tables, &layout, Control::Mode(mode::FORWARD))?];
    for i in 1..=n {
        gates.push(swap_wall(&layout, i)?);
    }
    gates.push(PermGate::from_rule(
        "W_rw[00] W_rw^-1[11]",
        &layout,
        &[Register::Mode, Register::Head, Register::Acc],
        |r| {
            let t = match r.get(Register::Mode) {
                mode::FORWARD => &tables,
                mode::BACKWARD => &inverse,
                _ => return,
            };
            let (h, a) = t.rw_image(r.get(Register::Head), r.get(Register::Acc));
            r.set(Register::Head, h);
            r.set(Register::Acc, a);
        },
    )?);
    for i in 1..=n {
        gates.push(swap_wall(&layout, i)?);
    }
    gates.push(moving_gate("MOVE^-1[11]", &inverse, &layout, Control::Mode(mode::BACKWARD))?);

    gates.push(PermGate::from_rule("COUNTER", &layout, &[Register::Mode, Register::Counter], |r| {
        let c = r.get(Register::Counter);
        let next = match r.get(Register::Mode) {
            mode::FORWARD | mode::IDLE_UP => (c + 1) % dim,
            _ => (c + dim - 1) % dim,
        };
        r.set(Register::Counter, next);
    })?);
    gates.push(PermGate::from_rule("IDLE", &layout, &[Register::Mode, Register::IdleCounter], |r| {
        let c = r.get(Register::IdleCounter);
        match r.get(Register::Mode) {
            mode::IDLE_UP => r.set(Register::IdleCounter, (c + 1) % dim),
            mode::IDLE_DOWN => r.set(Register::IdleCounter, (c + dim - 1) % dim),
            _ => {}
        }
    })?);
    gates.push(PermGate::from_rule(
        "SOL",
        &layout,
        &[Register::Mode, Register::Counter, res, Register::Solution],
        |r| {
            if r.get(Register::Mode) == mode::IDLE_UP
                && r.get(Register::Counter) == k
                && Some(r.get(res)) == accept
            {
                let s = r.get(Register::Solution);
                r.set(Register::Solution, s ^ 1);
            }
        },
    )?);

    let swap_modes = |r: &mut super::gate::LocalRegs, a: u32, b: u32| {
        let m = r.get(Register::Mode);
        if m == a {
            r.set(Register::Mode, b);
        } else if m == b {
            r.set(Register::Mode, a);
        }
    };
    let idle_final = |r: &super::gate::LocalRegs| {
        r.get(Register::IdleCounter) == 0 && finals[r.get(Register::Head) as usize]
    };
    gates.push(PermGate::from_rule(
        "MODE 00<->01",
        &layout,
        &[Register::Mode, Register::IdleCounter, Register::Head],
        |r| {
            if idle_final(r) {
                swap_modes(r, mode::FORWARD, mode::IDLE_UP);
            }
        },
    )?);
    gates.push(PermGate::from_rule("MODE 01<->10", &layout, &[Register::Mode, Register::Counter], |r| {
        if r.get(Register::Counter) == k {
            swap_modes(r, mode::IDLE_UP, mode::IDLE_DOWN);
        }
    })?);
    gates.push(PermGate::from_rule("MODE 11<->00", &layout, &[Register::Mode, Register::Counter], |r| {
        if r.get(Register::Counter) == 0 {
            swap_modes(r, mode::BACKWARD, mode::FORWARD);
        }
    })?);
    gates.push(PermGate::from_rule(
        "MODE 10<->11",
        &layout,
        &[Register::Mode, Register::IdleCounter, Register::Head],
        |r| {
            if idle_final(r) {
                swap_modes(r, mode::IDLE_DOWN, mode::BACKWARD);
            }
        },
    )?);

    Circuit::new(layout, gates, CircuitKind::Wrapper, vec![IDLE_COUNTER_NOTE.to_string()])
}

/// `|x⟩|0…0⟩`: head in the initial state, tape holding `input`, all other
/// registers zero.
pub fn wrapper_initial_state(
    spec: &RtmSpec,
    layout: &RegisterLayout,
    input: &[SymbolId],
) -> Result<BasisState, CompileError> {
    if input.len() != spec.tape_cells() {
        return Err(CompileError::DimensionMismatch(format!(
            "input has {} cells, machine has {}",
            input.len(),
            spec.tape_cells()
        )));
    }
    let mut state = layout.zero_state();
    layout.load_config(&mut state, &MachineConfig::initial(spec, input.to_vec()));
    Ok(state)
}

/// `2(2^{m+1} - 1)` when `f = 0`, twice that when `f = 1`.
pub fn expected_orbit_length(m: u32, f: u8) -> u64 {
    let r = 2 * ((1u64 << (m + 1)) - 1);
    if f == 1 {
        2 * r
    } else {
        r
    }
}
