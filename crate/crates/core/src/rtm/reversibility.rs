//! Exhaustive reversibility checks on the configuration step map.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::{
    step_machine, wrap_index, Direction, MachineConfig, RtmError, RtmSpec, StateKind, SymbolId,
    Transition,
};

/// Largest configuration space enumerated exhaustively. Bigger machines fall
/// back to a rule-level analysis, which is equivalent for injectivity.
pub const EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The step map is undefined on configurations with this head state
    /// (and scanned symbol, for read-write states).
    Undefined {
        state: String,
        symbol: Option<String>,
    },
    /// Two rules send distinct configurations to the same image.
    Collision {
        first: String,
        second: String,
        image: String,
    },
}

/// Conditions the circuit construction needs beyond injectivity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalFormIssue {
    /// The initial state is the target of a transition, so runs can re-enter
    /// it and the gate-level completions no longer track the machine.
    InitialReentered { state: String, rule: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Undefined { state, symbol: None } => write!(f, "no rule for state {state}"),
            Violation::Undefined { state, symbol: Some(s) } => {
                write!(f, "no rule for state {state} reading {s}")
            }
            Violation::Collision { first, second, image } => {
                write!(f, "{first} and {second} both reach {image}")
            }
        }
    }
}

impl fmt::Display for NormalFormIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalFormIssue::InitialReentered { state, rule } => {
                write!(f, "initial state {state} is entered by {rule}")
            }
        }
    }
}

/// A moving step taken at the tape boundary (wraps modulo `N`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryMove {
    pub state: String,
    pub tape_index: usize,
    pub direction: i64,
    pub input: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReversibilityReport {
    pub violations: Vec<Violation>,
    pub normal_form: Vec<NormalFormIssue>,
    pub boundary_moves: Vec<BoundaryMove>,
    /// Whether every configuration was enumerated.
    pub exhaustive: bool,
    pub configurations_checked: u128,
}

impl ReversibilityReport {
    pub fn is_reversible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Reversible and in the normal form the circuit compiler accepts.
    pub fn is_compilable(&self) -> bool {
        self.violations.is_empty() && self.normal_form.is_empty()
    }
}

pub(crate) fn describe_rule(spec: &RtmSpec, t: &Transition) -> String {
    match *t {
        Transition::Moving { from, to, dir } => format!(
            "move {} -> {} {}",
            spec.state_name(from),
            spec.state_name(to),
            dir
        ),
        Transition::ReadWrite {
            from,
            read,
            to,
            write,
        } => format!(
            "rw ({},{}) -> ({},{})",
            spec.state_name(from),
            spec.symbol_name(read),
            spec.state_name(to),
            spec.symbol_name(write)
        ),
    }
}

/// Index of the rule `step_machine` applies to `config`.
fn fired_rule(spec: &RtmSpec, config: &MachineConfig) -> Option<usize> {
    let read = config.tape[config.tape_index - 1];
    spec.transitions().iter().position(|t| match *t {
        Transition::Moving { from, .. } => from == config.head,
        Transition::ReadWrite { from, read: r, .. } => from == config.head && r == read,
    })
}

/// Every tape over the alphabet, in lexicographic order of symbol ids.
pub(crate) fn all_tapes(cells: usize, symbols: usize) -> impl Iterator<Item = Vec<SymbolId>> {
    let total = (symbols as u128).pow(cells as u32);
    (0..total).map(move |mut code| {
        let mut tape = vec![SymbolId(0); cells];
        for cell in tape.iter_mut() {
            *cell = SymbolId((code % symbols as u128) as usize);
            code /= symbols as u128;
        }
        tape
    })
}

fn undefined_rules(spec: &RtmSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in spec.states() {
        match spec.kind(s) {
            StateKind::Final => {}
            StateKind::MoveLeft | StateKind::MoveRight => {
                if spec.moving_rule(s).is_none() {
                    out.push(Violation::Undefined {
                        state: spec.state_name(s).into(),
                        symbol: None,
                    });
                }
            }
            StateKind::ReadWrite => {
                for a in spec.symbols() {
                    if spec.rw_rule(s, a).is_none() {
                        out.push(Violation::Undefined {
                            state: spec.state_name(s).into(),
                            symbol: Some(spec.symbol_name(a).into()),
                        });
                    }
                }
            }
        }
    }
    out
}

fn exhaustive_collisions(spec: &RtmSpec) -> (Vec<Violation>, u128) {
    let mut seen: HashMap<MachineConfig, (MachineConfig, usize)> = HashMap::new();
    let mut pairs = BTreeSet::new();
    let mut out = Vec::new();
    let mut checked = 0u128;
    for tape in all_tapes(spec.tape_cells(), spec.symbol_count()) {
        for head in spec.states() {
            for tape_index in 1..=spec.tape_cells() {
                checked += 1;
                if spec.is_final(head) {
                    continue;
                }
                let config = MachineConfig {
                    head,
                    tape_index,
                    tape: tape.clone(),
                    steps: 0,
                };
                let Ok(mut image) = step_machine(spec, &config) else {
                    continue;
                };
                image.steps = 0;
                let rule = fired_rule(spec, &config).expect("step succeeded");
                match seen.get(&image) {
                    Some(&(_, other)) => {
                        let key = (other.min(rule), other.max(rule));
                        if pairs.insert(key) {
                            out.push(Violation::Collision {
                                first: describe_rule(spec, &spec.transitions()[key.0]),
                                second: describe_rule(spec, &spec.transitions()[key.1]),
                                image: image.describe(spec),
                            });
                        }
                    }
                    None => {
                        seen.insert(image, (config, rule));
                    }
                }
            }
        }
    }
    (out, checked)
}

/// Rule-level injectivity: two rules collide unless both are read-write
/// rules writing different symbols.
fn rule_level_collisions(spec: &RtmSpec) -> Vec<Violation> {
    let ts = spec.transitions();
    let mut out = Vec::new();
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            if ts[i].to() != ts[j].to() {
                continue;
            }
            let distinct = matches!(
                (ts[i], ts[j]),
                (Transition::ReadWrite { write: a, .. }, Transition::ReadWrite { write: b, .. }) if a != b
            );
            if !distinct {
                out.push(Violation::Collision {
                    first: describe_rule(spec, &ts[i]),
                    second: describe_rule(spec, &ts[j]),
                    image: format!("head `{}`", spec.state_name(ts[i].to())),
                });
            }
        }
    }
    out
}

fn normal_form_issues(spec: &RtmSpec) -> Vec<NormalFormIssue> {
    spec.transitions()
        .iter()
        .filter(|t| t.to() == spec.initial())
        .map(|t| NormalFormIssue::InitialReentered {
            state: spec.state_name(spec.initial()).into(),
            rule: describe_rule(spec, t),
        })
        .collect()
}

fn boundary_moves(spec: &RtmSpec) -> Vec<BoundaryMove> {
    let budget = spec.configuration_count().unwrap_or(u128::MAX).min(u64::MAX as u128) as u64;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for tape in all_tapes(spec.tape_cells(), spec.symbol_count()) {
        let input = spec.format_tape(&tape);
        let mut config = MachineConfig::initial(spec, tape);
        while !spec.is_final(config.head) && config.steps <= budget {
            if let Some((_, dir)) = spec.moving_rule(config.head) {
                let at_edge = match dir {
                    Direction::Right => config.tape_index == spec.tape_cells(),
                    Direction::Left => config.tape_index == 1,
                };
                if at_edge && seen.insert((config.head, config.tape_index, dir.offset())) {
                    out.push(BoundaryMove {
                        state: spec.state_name(config.head).into(),
                        tape_index: config.tape_index,
                        direction: dir.offset(),
                        input: input.clone(),
                    });
                }
            }
            match step_machine(spec, &config) {
                Ok(next) => config = next,
                Err(_) => break,
            }
        }
    }
    out
}

/// Checks totality and injectivity of the configuration step map.
///
/// Desk-sized machines (at most [`EXHAUSTIVE_CAP`] configurations) are
/// enumerated exhaustively; larger ones are checked rule by rule.
pub fn check_reversibility(spec: &RtmSpec) -> ReversibilityReport {
    let mut violations = undefined_rules(spec);
    let count = spec.configuration_count();
    let exhaustive = matches!(count, Some(c) if c <= EXHAUSTIVE_CAP);
    let configurations_checked = if exhaustive {
        let (collisions, checked) = exhaustive_collisions(spec);
        violations.extend(collisions);
        checked
    } else {
        violations.extend(rule_level_collisions(spec));
        0
    };
    let boundary_moves = if exhaustive {
        boundary_moves(spec)
    } else {
        Vec::new()
    };
    ReversibilityReport {
        violations,
        normal_form: normal_form_issues(spec),
        boundary_moves,
        exhaustive,
        configurations_checked,
    }
}

/// Inverse of [`step_machine`], built by reversing the transitions.
pub fn unstep_machine(spec: &RtmSpec, config: &MachineConfig) -> Result<MachineConfig, RtmError> {
    spec.check_config(config)?;
    let mut found: Option<MachineConfig> = None;
    for t in spec.transitions() {
        if t.to() != config.head {
            continue;
        }
        let candidate = match *t {
            Transition::Moving { from, dir, .. } => MachineConfig {
                head: from,
                tape_index: wrap_index(config.tape_index, -dir.offset(), spec.tape_cells()),
                tape: config.tape.clone(),
                steps: config.steps.saturating_sub(1),
            },
            Transition::ReadWrite {
                from, read, write, ..
            } => {
                if config.tape[config.tape_index - 1] != write {
                    continue;
                }
                let mut tape = config.tape.clone();
                tape[config.tape_index - 1] = read;
                MachineConfig {
                    head: from,
                    tape_index: config.tape_index,
                    tape,
                    steps: config.steps.saturating_sub(1),
                }
            }
        };
        if found.replace(candidate).is_some() {
            return Err(RtmError::BadConfig(format!(
                "{} has several predecessors",
                config.describe(spec)
            )));
        }
    }
    found.ok_or(RtmError::NoPredecessor)
}
