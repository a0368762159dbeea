mod common;

use std::collections::BTreeSet;

use common::{load, INSTANCES, MACHINES};
use orbitmeter::compiler::{
    apply_circuit, build_moving_gate, build_rw_gates, build_step_circuit, build_step_circuit_with,
    build_wrapper_circuit, build_wrapper_circuit_with, circuit_is_bijective, circuit_orbit,
    circuit_orbit_length, expected_orbit_length, mode, wrapper_initial_state, BasisState, Circuit,
    CompileError, Register, RegisterLayout,
};
use orbitmeter::rtm::{
    parse_rtm_spec, run_machine, step_machine, MachineConfig, RtmSpec, StateId, StateKind, SymbolId,
    Transition,
};

fn tapes(cells: usize, symbols: usize) -> Vec<Vec<SymbolId>> {
    let mut out = vec![vec![]];
    for _ in 0..cells {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..symbols).map(move |s| {
                    let mut t = t.clone();
                    t.push(SymbolId(s));
                    t
                })
            })
            .collect();
    }
    out
}

fn all_configs(spec: &RtmSpec) -> Vec<MachineConfig> {
    let mut out = Vec::new();
    for head in spec.states() {
        for idx in 1..=spec.tape_cells() {
            for tape in tapes(spec.tape_cells(), spec.symbol_count()) {
                out.push(MachineConfig { head, tape_index: idx, tape, steps: 0 });
            }
        }
    }
    out
}

/// One application of `U` predicted from the machine rules: a moving step
/// if the head is moving, then a read-write step if the head is read-write.
/// `None` where the completed gates are not pinned down by the rules.
fn u_oracle(spec: &RtmSpec, c: &MachineConfig) -> Option<MachineConfig> {
    let targets = |moving: bool| -> BTreeSet<StateId> {
        spec.transitions()
            .iter()
            .filter(|t| matches!(t, Transition::Moving { .. }) == moving)
            .map(|t| t.to())
            .collect()
    };
    let (move_targets, rw_targets) = (targets(true), targets(false));
    let c1 = if spec.kind(c.head).is_moving() {
        step_machine(spec, c).ok()?
    } else if move_targets.contains(&c.head) {
        return None;
    } else {
        c.clone()
    };
    let c2 = if spec.kind(c1.head) == StateKind::ReadWrite {
        step_machine(spec, &c1).ok()?
    } else if rw_targets.contains(&c1.head) {
        return None;
    } else {
        c1
    };
    Some(c2)
}

fn load_state(layout: &RegisterLayout, c: &MachineConfig, acc: u32) -> BasisState {
    let mut s = layout.zero_state();
    layout.load_config(&mut s, c);
    layout.set(&mut s, Register::Acc, acc);
    s
}

#[test]
fn step_circuit_matches_machine_rules() {
    for name in MACHINES {
        let spec = load(name);
        for merged in [true, false] {
            let circuit = build_step_circuit_with(&spec, merged).unwrap();
            let layout = circuit.layout();
            let mut covered = 0;
            for c in all_configs(&spec) {
                let Some(want) = u_oracle(&spec, &c) else { continue };
                covered += 1;
                for acc in 0..spec.symbol_count() as u32 {
                    let out = apply_circuit(&circuit, &load_state(layout, &c, acc)).unwrap();
                    let got = layout.read_config(&out, spec.tape_cells());
                    assert!(got.same_point(&want), "{name}: {} -> {}", c.describe(&spec), got.describe(&spec));
                    assert_eq!(layout.get(&out, Register::Acc), acc, "{name}: ACC not restored");
                }
            }
            assert!(covered > 0, "{name}");
        }
    }
}

#[test]
fn step_circuit_runs_reach_machine_halt() {
    for (name, input, f) in INSTANCES {
        let spec = load(name);
        let circuit = build_step_circuit(&spec).unwrap();
        let layout = circuit.layout();
        let x = spec.encode_input(input).unwrap();
        let run = run_machine(&spec, &x, 1000).unwrap();
        assert!(run.halted);
        assert_eq!(run.f_of_x, f, "{name} {input}");
        let mut s = wrapper_initial_state(&spec, layout, &x).unwrap();
        let mut applications = 0;
        while !spec.is_final(StateId(layout.get(&s, Register::Head) as usize)) {
            circuit.apply_in_place(&mut s);
            applications += 1;
            assert!(applications <= run.steps_used);
        }
        assert!(layout.read_config(&s, spec.tape_cells()).same_point(&run.final_config));
    }
}

#[test]
fn immediate_halt_step_circuit_is_identity() {
    let spec = load("halt.rtm");
    let circuit = build_step_circuit(&spec).unwrap();
    for idx in 0..circuit.layout().space_size().unwrap() {
        let s = circuit.layout().unpack(idx);
        assert_eq!(apply_circuit(&circuit, &s).unwrap(), s);
    }
}

#[test]
fn flip_step_matches_direct_rule() {
    let spec = load("flip.rtm");
    let circuit = build_step_circuit(&spec).unwrap();
    let layout = circuit.layout();
    let c = MachineConfig::initial(&spec, spec.encode_input("0").unwrap());
    let out = apply_circuit(&circuit, &load_state(layout, &c, 0)).unwrap();
    assert_eq!(layout.read_config(&out, 1).describe(&spec), "(q1, 1, 1)");
}

#[test]
fn step_circuits_are_bijections() {
    for name in MACHINES {
        let spec = load(name);
        for merged in [true, false] {
            let circuit = build_step_circuit_with(&spec, merged).unwrap();
            assert_eq!(circuit_is_bijective(&circuit, 1 << 20), Some(true), "{name}");
        }
    }
}

#[test]
fn moving_gate_wraps_modulo_n() {
    let spec = parse_rtm_spec(
        "states: p:right q:final\nalphabet: 0 1\ninitial: p\ntape_cells: 3\n\
         transition: move p -> q +1\n",
    )
    .unwrap();
    let layout = RegisterLayout::machine(&spec, true).unwrap();
    let gate = build_moving_gate(&spec, &layout).unwrap();
    let mut s = layout.zero_state();
    layout.set(&mut s, Register::Head, 0);
    layout.set(&mut s, Register::TapeIndex, 2);
    gate.apply(&mut s);
    assert_eq!(layout.get(&s, Register::Head), 1);
    assert_eq!(layout.get(&s, Register::TapeIndex), 0);
}

#[test]
fn moving_gate_without_moving_states_is_identity() {
    let spec = load("flip.rtm");
    let layout = RegisterLayout::machine(&spec, true).unwrap();
    assert!(build_moving_gate(&spec, &layout).unwrap().is_identity());
}

#[test]
fn walker_moving_gate_matches_enumeration() {
    let spec = load("walker.rtm");
    let layout = RegisterLayout::machine(&spec, false).unwrap();
    let gate = build_moving_gate(&spec, &layout).unwrap();
    let n = spec.tape_cells() as i64;
    for head in spec.states() {
        for idx in 0..n {
            let mut s = layout.zero_state();
            layout.set(&mut s, Register::Head, head.0 as u32);
            layout.set(&mut s, Register::TapeIndex, idx as u32);
            gate.apply(&mut s);
            if let Some((to, dir)) = spec.moving_rule(head) {
                let want = (idx + dir.offset()).rem_euclid(n);
                assert_eq!(layout.get(&s, Register::Head), to.0 as u32);
                assert_eq!(layout.get(&s, Register::TapeIndex) as i64, want);
            }
        }
    }
}

#[test]
fn rw_gates_without_rw_states_compose_to_identity() {
    let spec = parse_rtm_spec(
        "states: p:left q:final\nalphabet: 0 1\ninitial: p\ntape_cells: 2\n\
         transition: move p -> q -1\n",
    )
    .unwrap();
    let layout = RegisterLayout::machine(&spec, true).unwrap();
    let gates = build_rw_gates(&spec, &layout).unwrap();
    assert_eq!(gates.len(), 2 * 2 + 1);
    let circuit = Circuit::new(layout, gates, orbitmeter::compiler::CircuitKind::Custom, vec![]).unwrap();
    for idx in 0..circuit.layout().space_size().unwrap() {
        let s = circuit.layout().unpack(idx);
        assert_eq!(apply_circuit(&circuit, &s).unwrap(), s);
    }
}

#[test]
fn rw_gates_rewrite_scanned_cell() {
    let spec = parse_rtm_spec(
        "states: p:rw q:final\nalphabet: 0 1\ninitial: p\ntape_cells: 2\n\
         transition: rw (p,0) -> (q,1)\ntransition: rw (p,1) -> (q,0)\n",
    )
    .unwrap();
    let layout = RegisterLayout::machine(&spec, true).unwrap();
    let gates = build_rw_gates(&spec, &layout).unwrap();
    let circuit = Circuit::new(layout, gates, orbitmeter::compiler::CircuitKind::Custom, vec![]).unwrap();
    let c = MachineConfig::initial(&spec, spec.encode_input("00").unwrap());
    let out = apply_circuit(&circuit, &load_state(circuit.layout(), &c, 0)).unwrap();
    let got = circuit.layout().read_config(&out, 2);
    assert_eq!(got.describe(&spec), "(q, 1, 10)");
    assert_eq!(circuit.layout().get(&out, Register::Acc), 0);
}

#[test]
fn non_reversible_spec_is_rejected() {
    let spec = parse_rtm_spec(
        "states: p:rw q:final\nalphabet: 0 1\ninitial: p\ntape_cells: 1\n\
         transition: rw (p,0) -> (q,1)\ntransition: rw (p,1) -> (q,1)\n",
    )
    .unwrap();
    assert!(matches!(build_step_circuit(&spec), Err(CompileError::NotReversible(_))));
    assert!(matches!(build_wrapper_circuit(&spec), Err(CompileError::NotReversible(_))));
    let layout = RegisterLayout::machine(&spec, true).unwrap();
    assert!(matches!(build_rw_gates(&spec, &layout), Err(CompileError::NotBijective { .. })));
}

#[test]
fn wrapper_orbit_lengths_and_solution() {
    for (name, input, f) in INSTANCES {
        let spec = load(name);
        let v = build_wrapper_circuit(&spec).unwrap();
        let layout = v.layout();
        let x = spec.encode_input(input).unwrap();
        let init = wrapper_initial_state(&spec, layout, &x).unwrap();
        let r = circuit_orbit_length(&v, &init, 1 << 24).unwrap();
        assert_eq!(r, expected_orbit_length(layout.m(), f), "{name} {input}");

        let half = expected_orbit_length(layout.m(), 0);
        let mut s = init.clone();
        for _ in 0..half {
            v.apply_in_place(&mut s);
        }
        let mut want = init.clone();
        layout.set(&mut want, Register::Solution, f as u32);
        assert_eq!(s, want, "{name} {input}");
    }
}

#[test]
fn wrapper_first_step_advances_machine_and_counter() {
    let spec = load("walker.rtm");
    let v = build_wrapper_circuit(&spec).unwrap();
    let u = build_step_circuit(&spec).unwrap();
    let x = spec.encode_input("101").unwrap();
    let init = wrapper_initial_state(&spec, v.layout(), &x).unwrap();
    let next = apply_circuit(&v, &init).unwrap();
    assert_eq!(v.layout().get(&next, Register::Counter), 1);
    assert_eq!(v.layout().get(&next, Register::Mode), mode::FORWARD);
    let u_next = apply_circuit(&u, &wrapper_initial_state(&spec, u.layout(), &x).unwrap()).unwrap();
    assert!(v
        .layout()
        .read_config(&next, 3)
        .same_point(&u.layout().read_config(&u_next, 3)));
}

#[test]
fn wrapper_mode_rules() {
    let spec = load("xor.rtm");
    let v = build_wrapper_circuit(&spec).unwrap();
    let l = v.layout();
    let k = l.counter_max();

    let mut s = l.zero_state();
    l.set(&mut s, Register::Mode, mode::IDLE_UP);
    l.set(&mut s, Register::Counter, k - 1);
    l.set(&mut s, Register::IdleCounter, 3);
    l.set(&mut s, Register::Head, spec.state_id("f0").unwrap().0 as u32);
    let out = apply_circuit(&v, &s).unwrap();
    assert_eq!(l.get(&out, Register::Counter), k);
    assert_eq!(l.get(&out, Register::Mode), mode::IDLE_DOWN);

    // Rule 2 on a final state no rule enters.
    let halt = load("halt.rtm");
    let hv = build_wrapper_circuit(&halt).unwrap();
    let hl = hv.layout();
    let mut s = hl.zero_state();
    hl.set(&mut s, Register::Mode, mode::FORWARD);
    hl.set(&mut s, Register::Counter, 2);
    let out = apply_circuit(&hv, &s).unwrap();
    assert_eq!(hl.get(&out, Register::Mode), mode::IDLE_UP);

    // Rule 2 on the step whose payload enters a final state.
    let x = spec.encode_input("01").unwrap();
    let mut s = wrapper_initial_state(&spec, l, &x).unwrap();
    v.apply_in_place(&mut s);
    assert_eq!(l.get(&s, Register::Mode), mode::FORWARD);
    v.apply_in_place(&mut s);
    assert!(spec.is_final(StateId(l.get(&s, Register::Head) as usize)));
    assert_eq!(l.get(&s, Register::Mode), mode::IDLE_UP);
}

#[test]
fn merged_wrapper_gates_touch_two_wires() {
    for name in MACHINES {
        let spec = load(name);
        let v = build_wrapper_circuit(&spec).unwrap();
        assert!(v.max_support() <= 2, "{name}: {}", v.max_support());
        assert_eq!(v.s(), 2 * spec.tape_cells() + 10);
        let unmerged = build_wrapper_circuit_with(&spec, false).unwrap();
        assert!(unmerged.max_support() > 2, "{name}");
    }
}

#[test]
fn unmerged_wrapper_has_same_orbit() {
    let spec = load("xor.rtm");
    let v = build_wrapper_circuit_with(&spec, false).unwrap();
    let x = spec.encode_input("01").unwrap();
    let init = wrapper_initial_state(&spec, v.layout(), &x).unwrap();
    assert_eq!(
        circuit_orbit_length(&v, &init, 1 << 20).unwrap(),
        expected_orbit_length(v.layout().m(), 1)
    );
}

#[test]
fn orbit_states_are_distinct() {
    let spec = load("flip.rtm");
    let v = build_wrapper_circuit(&spec).unwrap();
    let init = wrapper_initial_state(&spec, v.layout(), &spec.encode_input("0").unwrap()).unwrap();
    let orbit = circuit_orbit(&v, &init, 1 << 20).unwrap();
    let distinct: BTreeSet<_> = orbit.iter().collect();
    assert_eq!(distinct.len(), orbit.len());
}

#[test]
fn small_wrapper_is_bijection() {
    let spec = load("halt.rtm");
    let v = build_wrapper_circuit(&spec).unwrap();
    assert_eq!(circuit_is_bijective(&v, 1 << 22), Some(true));
}

#[test]
fn dump_is_byte_stable_and_replays() {
    let spec = load("xor.rtm");
    let a = build_wrapper_circuit(&spec).unwrap().to_json();
    let b = build_wrapper_circuit(&spec).unwrap().to_json();
    assert_eq!(a, b);
    assert!(a.contains("idle_counter"));
    let replay = Circuit::from_json(&a).unwrap();
    let x = spec.encode_input("11").unwrap();
    let init = wrapper_initial_state(&spec, replay.layout(), &x).unwrap();
    assert_eq!(
        circuit_orbit_length(&replay, &init, 1 << 20).unwrap(),
        expected_orbit_length(replay.layout().m(), 0)
    );
}
