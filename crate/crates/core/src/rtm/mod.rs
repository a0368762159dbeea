//! Reversible Turing machines in moving / read-write normal form.
//!
//! Every state is exclusively a read-and-write state, a right-moving state,
//! a left-moving state or a final state. A moving transition `p -> (q, ±1)`
//! shifts the head without touching the tape; a read-write transition
//! `(p, a) -> (q, b)` rewrites the scanned cell without moving. Tape cells are
//! numbered `1..=N` and head positions wrap modulo `N`.

mod parse;
mod reversibility;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_rtm_spec, ParseError};
pub use reversibility::{
    check_reversibility, unstep_machine, BoundaryMove, NormalFormIssue, ReversibilityReport,
    Violation, EXHAUSTIVE_CAP,
};

/// Index of a state in [`RtmSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub usize);

/// Index of a tape symbol in [`RtmSpec`]. Symbol 0 is the blank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    ReadWrite,
    MoveRight,
    MoveLeft,
    Final,
}

impl StateKind {
    pub fn is_moving(self) -> bool {
        matches!(self, StateKind::MoveRight | StateKind::MoveLeft)
    }

    pub fn tag(self) -> &'static str {
        match self {
            StateKind::ReadWrite => "rw",
            StateKind::MoveRight => "right",
            StateKind::MoveLeft => "left",
            StateKind::Final => "final",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn offset(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Left => "-1",
            Direction::Right => "+1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    Moving {
        from: StateId,
        to: StateId,
        dir: Direction,
    },
    ReadWrite {
        from: StateId,
        read: SymbolId,
        to: StateId,
        write: SymbolId,
    },
}

impl Transition {
    pub fn from(&self) -> StateId {
        match *self {
            Transition::Moving { from, .. } | Transition::ReadWrite { from, .. } => from,
        }
    }

    pub fn to(&self) -> StateId {
        match *self {
            Transition::Moving { to, .. } | Transition::ReadWrite { to, .. } => to,
        }
    }
}

/// Structural problems found while assembling an [`RtmSpec`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("duplicate transition: {0}")]
    DuplicateTransition(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("invalid machine: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RtmError {
    #[error("no transition for state `{state}` reading `{symbol}`")]
    NoTransition { state: String, symbol: String },
    #[error("cannot step from final state `{0}`")]
    FinalStepped(String),
    #[error("input of length {len} does not fit on {cells} tape cells")]
    InputTooLong { len: usize, cells: usize },
    #[error("unknown symbol `{0}` in input")]
    UnknownSymbol(String),
    #[error("configuration does not match the machine: {0}")]
    BadConfig(String),
    #[error("configuration has no predecessor")]
    NoPredecessor,
}

/// A reversible Turing machine with a finite tape of `tape_cells` cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RtmSpec {
    state_names: Vec<String>,
    kinds: Vec<StateKind>,
    alphabet: Vec<String>,
    transitions: Vec<Transition>,
    initial: StateId,
    tape_cells: usize,
    result_cell: usize,
    moving: Vec<Option<(StateId, Direction)>>,
    rw: Vec<Vec<Option<(StateId, SymbolId)>>>,
}

impl RtmSpec {
    /// Assembles a machine, resolving the per-state rule tables.
    ///
    /// Partial machines are accepted here; totality is a property reported by
    /// [`check_reversibility`].
    pub fn new(
        states: Vec<(String, StateKind)>,
        alphabet: Vec<String>,
        transitions: Vec<Transition>,
        initial: StateId,
        tape_cells: usize,
        result_cell: usize,
    ) -> Result<Self, SpecError> {
        if states.is_empty() {
            return Err(SpecError::Invalid("no states declared".into()));
        }
        if alphabet.len() < 2 {
            return Err(SpecError::Invalid(
                "alphabet needs a blank and at least one other symbol".into(),
            ));
        }
        for (i, a) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(a) {
                return Err(SpecError::Invalid(format!("symbol `{a}` declared twice")));
            }
        }
        for (i, (name, _)) in states.iter().enumerate() {
            if states[..i].iter().any(|(n, _)| n == name) {
                return Err(SpecError::Invalid(format!("state `{name}` declared twice")));
            }
        }
        if tape_cells == 0 {
            return Err(SpecError::Invalid("tape_cells must be positive".into()));
        }
        if result_cell == 0 || result_cell > tape_cells {
            return Err(SpecError::Invalid(format!(
                "result_cell {result_cell} outside 1..={tape_cells}"
            )));
        }
        if initial.0 >= states.len() {
            return Err(SpecError::Invalid("initial state out of range".into()));
        }

        let (state_names, kinds): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        let mut moving = vec![None; kinds.len()];
        let mut rw = vec![vec![None; alphabet.len()]; kinds.len()];

        for t in &transitions {
            let from = t.from();
            let to = t.to();
            if from.0 >= kinds.len() || to.0 >= kinds.len() {
                return Err(SpecError::Invalid("transition state out of range".into()));
            }
            let name = &state_names[from.0];
            match *t {
                Transition::Moving { dir, .. } => {
                    let expected = match dir {
                        Direction::Right => StateKind::MoveRight,
                        Direction::Left => StateKind::MoveLeft,
                    };
                    if kinds[from.0] != expected {
                        return Err(SpecError::KindMismatch(format!(
                            "`{name}` is tagged {} but has a {dir} moving rule",
                            kinds[from.0].tag()
                        )));
                    }
                    if moving[from.0].is_some() {
                        return Err(SpecError::DuplicateTransition(format!(
                            "second moving rule for `{name}`"
                        )));
                    }
                    moving[from.0] = Some((to, dir));
                }
                Transition::ReadWrite {
                    read, write, ..
                } => {
                    if read.0 >= alphabet.len() || write.0 >= alphabet.len() {
                        return Err(SpecError::Invalid("transition symbol out of range".into()));
                    }
                    if kinds[from.0] != StateKind::ReadWrite {
                        return Err(SpecError::KindMismatch(format!(
                            "`{name}` is tagged {} but has a read-write rule",
                            kinds[from.0].tag()
                        )));
                    }
                    let slot = &mut rw[from.0][read.0];
                    if slot.is_some() {
                        return Err(SpecError::DuplicateTransition(format!(
                            "second rule for (`{name}`, `{}`)",
                            alphabet[read.0]
                        )));
                    }
                    *slot = Some((to, write));
                }
            }
        }

        Ok(Self {
            state_names,
            kinds,
            alphabet,
            transitions,
            initial,
            tape_cells,
            result_cell,
            moving,
            rw,
        })
    }

    pub fn state_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.kinds.len()).map(StateId)
    }

    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.alphabet.len()).map(SymbolId)
    }

    pub fn kind(&self, state: StateId) -> StateKind {
        self.kinds[state.0]
    }

    pub fn is_final(&self, state: StateId) -> bool {
        self.kinds[state.0] == StateKind::Final
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.state_names[state.0]
    }

    pub fn symbol_name(&self, symbol: SymbolId) -> &str {
        &self.alphabet[symbol.0]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name).map(StateId)
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.alphabet.iter().position(|n| n == name).map(SymbolId)
    }

    pub fn blank(&self) -> SymbolId {
        SymbolId(0)
    }

    /// The symbol that signals `f(x) = 1` in the result cell.
    pub fn accept_symbol(&self) -> Option<SymbolId> {
        self.symbol_id("1")
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn tape_cells(&self) -> usize {
        self.tape_cells
    }

    pub fn result_cell(&self) -> usize {
        self.result_cell
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn moving_rule(&self, state: StateId) -> Option<(StateId, Direction)> {
        self.moving[state.0]
    }

    pub fn rw_rule(&self, state: StateId, read: SymbolId) -> Option<(StateId, SymbolId)> {
        self.rw[state.0][read.0]
    }

    /// Reads `f(x)` off a tape: 1 iff the result cell holds the accept symbol.
    pub fn result_bit(&self, tape: &[SymbolId]) -> u8 {
        match self.accept_symbol() {
            Some(acc) if tape[self.result_cell - 1] == acc => 1,
            _ => 0,
        }
    }

    /// `|Q| · N · |Σ|^N`, or `None` on overflow.
    pub fn configuration_count(&self) -> Option<u128> {
        let tapes = (self.alphabet.len() as u128).checked_pow(self.tape_cells as u32)?;
        (self.kinds.len() as u128)
            .checked_mul(self.tape_cells as u128)?
            .checked_mul(tapes)
    }

    /// Splits an input word into symbols and pads it with blanks to `N` cells.
    ///
    /// Words containing whitespace are split on it; otherwise every character
    /// is one symbol.
    pub fn encode_input(&self, word: &str) -> Result<Vec<SymbolId>, RtmError> {
        let tokens: Vec<String> = if word.chars().any(char::is_whitespace) {
            word.split_whitespace().map(str::to_owned).collect()
        } else {
            word.chars().map(String::from).collect()
        };
        if tokens.len() > self.tape_cells {
            return Err(RtmError::InputTooLong {
                len: tokens.len(),
                cells: self.tape_cells,
            });
        }
        let mut tape = vec![self.blank(); self.tape_cells];
        for (cell, tok) in tape.iter_mut().zip(&tokens) {
            *cell = self
                .symbol_id(tok)
                .ok_or_else(|| RtmError::UnknownSymbol(tok.clone()))?;
        }
        Ok(tape)
    }

    pub fn format_tape(&self, tape: &[SymbolId]) -> String {
        let single = self.alphabet.iter().all(|s| s.chars().count() == 1);
        let parts: Vec<&str> = tape.iter().map(|s| self.symbol_name(*s)).collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }

    pub(crate) fn check_config(&self, config: &MachineConfig) -> Result<(), RtmError> {
        if config.head.0 >= self.kinds.len() {
            return Err(RtmError::BadConfig("head state out of range".into()));
        }
        if config.tape.len() != self.tape_cells {
            return Err(RtmError::BadConfig(format!(
                "tape has {} cells, machine has {}",
                config.tape.len(),
                self.tape_cells
            )));
        }
        if config.tape_index == 0 || config.tape_index > self.tape_cells {
            return Err(RtmError::BadConfig(format!(
                "tape_index {} outside 1..={}",
                config.tape_index, self.tape_cells
            )));
        }
        if config.tape.iter().any(|s| s.0 >= self.alphabet.len()) {
            return Err(RtmError::BadConfig("tape symbol out of range".into()));
        }
        Ok(())
    }
}

/// Instantaneous description of a machine.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineConfig {
    pub head: StateId,
    /// Head position, `1..=N`.
    pub tape_index: usize,
    pub tape: Vec<SymbolId>,
    pub steps: u64,
}

impl MachineConfig {
    pub fn initial(spec: &RtmSpec, tape: Vec<SymbolId>) -> Self {
        Self {
            head: spec.initial(),
            tape_index: 1,
            tape,
            steps: 0,
        }
    }

    /// Same configuration ignoring the step counter.
    pub fn same_point(&self, other: &MachineConfig) -> bool {
        self.head == other.head && self.tape_index == other.tape_index && self.tape == other.tape
    }

    pub fn describe(&self, spec: &RtmSpec) -> String {
        format!(
            "({}, {}, {})",
            spec.state_name(self.head),
            self.tape_index,
            spec.format_tape(&self.tape)
        )
    }
}

/// `(i + offset) mod N` on 1-based cell indices.
pub(crate) fn wrap_index(index: usize, offset: i64, cells: usize) -> usize {
    let n = cells as i64;
    ((index as i64 - 1 + offset).rem_euclid(n) + 1) as usize
}

/// Applies the single transition selected by the head state.
pub fn step_machine(spec: &RtmSpec, config: &MachineConfig) -> Result<MachineConfig, RtmError> {
    spec.check_config(config)?;
    let head = config.head;
    let mut next = config.clone();
    match spec.kind(head) {
        StateKind::Final => return Err(RtmError::FinalStepped(spec.state_name(head).into())),
        StateKind::MoveLeft | StateKind::MoveRight => {
            let (to, dir) = spec.moving_rule(head).ok_or_else(|| RtmError::NoTransition {
                state: spec.state_name(head).into(),
                symbol: spec
                    .symbol_name(config.tape[config.tape_index - 1])
                    .into(),
            })?;
            next.head = to;
            next.tape_index = wrap_index(config.tape_index, dir.offset(), spec.tape_cells());
        }
        StateKind::ReadWrite => {
            let read = config.tape[config.tape_index - 1];
            let (to, write) = spec.rw_rule(head, read).ok_or_else(|| RtmError::NoTransition {
                state: spec.state_name(head).into(),
                symbol: spec.symbol_name(read).into(),
            })?;
            next.head = to;
            next.tape[config.tape_index - 1] = write;
        }
    }
    next.steps += 1;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub halted: bool,
    pub final_config: MachineConfig,
    pub f_of_x: u8,
    pub steps_used: u64,
    pub budget_exhausted: bool,
}

/// Runs from the initial configuration on `input` until a final state is
/// entered or `max_steps` transitions have been taken.
pub fn run_machine(
    spec: &RtmSpec,
    input: &[SymbolId],
    max_steps: u64,
) -> Result<RunResult, RtmError> {
    if input.len() > spec.tape_cells() {
        return Err(RtmError::InputTooLong {
            len: input.len(),
            cells: spec.tape_cells(),
        });
    }
    let mut tape = input.to_vec();
    tape.resize(spec.tape_cells(), spec.blank());
    let mut config = MachineConfig::initial(spec, tape);
    spec.check_config(&config)?;
    while !spec.is_final(config.head) {
        if config.steps >= max_steps {
            return Ok(RunResult {
                halted: false,
                f_of_x: spec.result_bit(&config.tape),
                steps_used: config.steps,
                final_config: config,
                budget_exhausted: true,
            });
        }
        config = step_machine(spec, &config)?;
    }
    Ok(RunResult {
        halted: true,
        f_of_x: spec.result_bit(&config.tape),
        steps_used: config.steps,
        final_config: config,
        budget_exhausted: false,
    })
}

/// [`run_machine`] on a textual input word.
pub fn run_word(spec: &RtmSpec, word: &str, max_steps: u64) -> Result<RunResult, RtmError> {
    let tape = spec.encode_input(word)?;
    run_machine(spec, &tape, max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn flip() -> RtmSpec {
        parse_rtm_spec(
            "states: p0:rw q0:final q1:final\n\
             alphabet: 0 1\n\
             initial: p0\n\
             tape_cells: 1\n\
             transition: rw (p0,0) -> (q1,1)\n\
             transition: rw (p0,1) -> (q0,0)\n",
        )
        .unwrap()
    }

    fn mover() -> RtmSpec {
        parse_rtm_spec(
            "states: p:right q:final\nalphabet: 0 1\ninitial: p\ntape_cells: 3\n\
             transition: move p -> q +1\n",
        )
        .unwrap()
    }

    #[test]
    fn right_move_wraps_at_last_cell() {
        let spec = mover();
        let config = MachineConfig {
            head: spec.state_id("p").unwrap(),
            tape_index: 3,
            tape: vec![SymbolId(0); 3],
            steps: 0,
        };
        let next = step_machine(&spec, &config).unwrap();
        assert_eq!(next.tape_index, 1);
        assert_eq!(next.head, spec.state_id("q").unwrap());
        assert_eq!(next.tape, config.tape);
    }

    #[test]
    fn identity_rewrite_only_counts_a_step() {
        let spec = parse_rtm_spec(
            "states: p:rw\nalphabet: 0 1\ninitial: p\ntape_cells: 2\n\
             transition: rw (p,0) -> (p,0)\ntransition: rw (p,1) -> (p,1)\n",
        )
        .unwrap();
        let config = MachineConfig::initial(&spec, vec![SymbolId(0), SymbolId(1)]);
        let next = step_machine(&spec, &config).unwrap();
        assert!(next.same_point(&config));
        assert_eq!(next.steps, 1);
    }

    #[test]
    fn flip_machine_single_step() {
        let spec = flip();
        let config = MachineConfig::initial(&spec, spec.encode_input("0").unwrap());
        let next = step_machine(&spec, &config).unwrap();
        assert_eq!(next.describe(&spec), "(q1, 1, 1)");
    }

    #[test]
    fn stepping_a_final_state_fails() {
        let spec = flip();
        let config = MachineConfig {
            head: spec.state_id("q0").unwrap(),
            tape_index: 1,
            tape: vec![SymbolId(0)],
            steps: 0,
        };
        assert!(matches!(
            step_machine(&spec, &config),
            Err(RtmError::FinalStepped(_))
        ));
    }

    #[test]
    fn missing_rule_is_reported() {
        let spec = parse_rtm_spec(
            "states: p:rw\nalphabet: 0 1\ninitial: p\ntape_cells: 1\n\
             transition: rw (p,0) -> (p,0)\n",
        )
        .unwrap();
        let err = run_word(&spec, "1", 10).unwrap_err();
        assert!(matches!(err, RtmError::NoTransition { .. }));
    }

    #[test]
    fn run_flip_and_budget() {
        let spec = flip();
        let run = run_word(&spec, "0", 10).unwrap();
        assert!(run.halted);
        assert_eq!(run.f_of_x, 1);
        assert_eq!(run.steps_used, 1);

        let run = run_word(&spec, "1", 10).unwrap();
        assert_eq!(run.f_of_x, 0);

        let run = run_word(&spec, "0", 0).unwrap();
        assert!(!run.halted);
        assert!(run.budget_exhausted);
        assert_eq!(run.steps_used, 0);
    }

    #[test]
    fn immediate_halt_reads_input() {
        let spec = parse_rtm_spec(
            "states: h:final\nalphabet: 0 1\ninitial: h\ntape_cells: 1\n",
        )
        .unwrap();
        let run = run_word(&spec, "1", 5).unwrap();
        assert!(run.halted);
        assert_eq!(run.steps_used, 0);
        assert_eq!(run.f_of_x, 1);
        assert_eq!(run_word(&spec, "0", 5).unwrap().f_of_x, 0);
    }

    #[test]
    fn input_too_long() {
        let spec = flip();
        assert!(matches!(
            spec.encode_input("01"),
            Err(RtmError::InputTooLong { len: 2, cells: 1 })
        ));
        assert!(matches!(
            spec.encode_input("x"),
            Err(RtmError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn wrap_index_both_ways() {
        assert_eq!(wrap_index(1, -1, 4), 4);
        assert_eq!(wrap_index(4, 1, 4), 1);
        assert_eq!(wrap_index(2, 1, 4), 3);
        assert_eq!(wrap_index(1, 1, 1), 1);
    }
}
