//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (outside libtest's capture) and then asserts.

mod common;

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::Write as _;
use std::time::{Duration, Instant};

use common::{corpus_dir, instance_scales, load, INSTANCES, MACHINES};
use num_rational::Ratio;
use orbitmeter::clockwork::{
    compute_orbit, dense_orbit_oracle, locality_report, spectral_gap, spectral_model, ClockedState, ForwardOperator,
};
use orbitmeter::compiler::{
    build_wrapper_circuit, circuit_orbit_length, expected_orbit_length, machine_register_bits, wrapper_initial_state,
    Register,
};
use orbitmeter::harness::{run_experiment, ExperimentConfig};
use orbitmeter::metrology::{
    chernoff_confidence, decide, draw_batches, phase_estimate_distribution, AccuracyModel, ExactSampler, FailureMode,
    PhaseEstimationSetup, PhaseSampler, SampleBatch, ODD_FRACTION_FALSE, ODD_FRACTION_TRUE, PROBABILITY_GAP,
};

const SPECTRUM_TOL: f64 = 1e-9;
const GAP_REL_TOL: f64 = 0.10;
const SIGMAS: f64 = 3.0;
const MIN_AGREEMENT: f64 = 0.99;

fn verdict(n: u32, title: &str, failures: &[String], elapsed: Duration) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "criterion {n}: {status} {title} ({:.2}s)", elapsed.as_secs_f64()).unwrap();
    for f in failures {
        writeln!(err, "    {f}").unwrap();
    }
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

#[test]
fn criterion_1_orbit_length_law() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, input, f) in INSTANCES {
        let t = Instant::now();
        let spec = load(name);
        let circuit = build_wrapper_circuit(&spec).unwrap();
        let tape = spec.encode_input(input).unwrap();
        let initial = wrapper_initial_state(&spec, circuit.layout(), &tape).unwrap();
        let m = machine_register_bits(&spec).unwrap();
        let want = expected_orbit_length(m, f);
        let got = circuit_orbit_length(&circuit, &initial, 4 * want).unwrap();
        check(&mut failures, got == want, || format!("{name} x={input}: r = {got}, expected {want}"));
        check(&mut failures, m > 8 || t.elapsed() < Duration::from_secs(60), || {
            format!("{name} x={input}: {:?} for m = {m}", t.elapsed())
        });
    }
    verdict(1, "orbit length 2(2^{m+1}-1), doubled when f(x)=1", &failures, start.elapsed());
}

#[test]
fn criterion_2_register_restoration() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, input, f) in INSTANCES {
        let spec = load(name);
        let circuit = build_wrapper_circuit(&spec).unwrap();
        let layout = circuit.layout().clone();
        let tape = spec.encode_input(input).unwrap();
        let initial = wrapper_initial_state(&spec, &layout, &tape).unwrap();
        let r = expected_orbit_length(machine_register_bits(&spec).unwrap(), 0);
        let mut state = initial.clone();
        for _ in 0..r {
            circuit.apply_in_place(&mut state);
        }
        for reg in layout.registers() {
            let want = if reg == Register::Solution { f as u32 } else { layout.get(&initial, reg) };
            let got = layout.get(&state, reg);
            check(&mut failures, got == want, || format!("{name} x={input}: {reg} = {got}, expected {want}"));
        }
    }
    verdict(2, "V^r restores every register except solution = f(x)", &failures, start.elapsed());
}

#[test]
fn criterion_3_clock_orbit_dimension() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, input, f) in INSTANCES {
        let spec = load(name);
        let (_, _, want) = instance_scales(&spec, f);
        let circuit = build_wrapper_circuit(&spec).unwrap();
        let s = circuit.s() as u64;
        let tape = spec.encode_input(input).unwrap();
        let initial = ClockedState::new(wrapper_initial_state(&spec, circuit.layout(), &tape).unwrap(), 1);
        let forward = ForwardOperator::new(circuit);
        let orbit = compute_orbit(&forward, &initial, 2 * want).unwrap();
        check(&mut failures, orbit.d == want, || format!("{name} x={input}: d = {}, expected {want}", orbit.d));
        let m = machine_register_bits(&spec).unwrap();
        check(&mut failures, want == s * expected_orbit_length(m, f), || format!("{name}: d != s r"));

        let distinct: HashSet<ClockedState> = orbit.states().collect();
        check(&mut failures, distinct.len() as u64 == orbit.d, || {
            format!("{name} x={input}: {} distinct of {}", distinct.len(), orbit.d)
        });
        let mut cur = initial.clone();
        for _ in 0..orbit.d {
            cur = forward.apply_forward(&cur).unwrap();
        }
        check(&mut failures, cur == initial, || format!("{name} x={input}: F^d is not the identity"));
    }
    verdict(3, "clock orbit d = s r (f=0) or 2 s r (f=1), distinct states, F^d = 1", &failures, start.elapsed());
}

#[test]
fn criterion_4_spectrum() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for d in [2usize, 3, 4, 8, 64, 256, 1024] {
        let model = spectral_model(d as u64);
        let closed = model.eigenvalues();
        let dense = dense_orbit_oracle(d).unwrap();
        check(&mut failures, closed.len() == d && dense.len() == d, || format!("d={d}: wrong eigenvalue count"));
        let worst = closed.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        check(&mut failures, worst <= SPECTRUM_TOL, || format!("d={d}: max deviation {worst:e}"));

        for e in &model.entries {
            let edge = e.eigenvalue == 1.0 || e.eigenvalue == -1.0;
            let want = if edge { Ratio::new(1, d as u64) } else { Ratio::new(2, d as u64) };
            check(&mut failures, e.probability == want, || {
                format!("d={d} j={}: probability {} expected {want}", e.j, e.probability)
            });
        }
        check(&mut failures, model.probability_sum() == Ratio::from_integer(1), || format!("d={d}: sum != 1"));
    }
    check(&mut failures, start.elapsed() < Duration::from_secs(120), || format!("runtime {:?}", start.elapsed()));
    verdict(4, "closed-form spectrum vs dense oracle, exact probabilities", &failures, start.elapsed());
}

#[test]
fn criterion_5_spectral_gap() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut d = 64u64;
    while d <= 1 << 30 {
        for dd in [d, d + 1, 3 * d / 2] {
            let gap = spectral_gap(dd);
            let direct = 1.0 - (2.0 * PI / dd as f64).cos();
            let taylor = (2.0 * PI / dd as f64).powi(2) / 2.0;
            check(&mut failures, (gap - direct).abs() <= 1e-12 * taylor.max(direct) + 1e-15, || {
                format!("d={dd}: gap {gap:e} vs 1-cos {direct:e}")
            });
            check(&mut failures, (gap / taylor - 1.0).abs() <= GAP_REL_TOL, || {
                format!("d={dd}: gap/taylor = {}", gap / taylor)
            });
        }
        d *= 2;
    }
    verdict(5, "1 - cos(2 pi/d) within 10% of (2 pi/d)^2/2 for d >= 64", &failures, start.elapsed());
}

#[test]
fn criterion_6_postulate_compliance() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let n = 100_000;
    let spec = load("xor.rtm");
    let (r, s, d) = instance_scales(&spec, 1);
    let sampler = ExactSampler::new(&spectral_model(d));
    let delta = 1.0 / (r * s) as f64;
    let floor = 0.75 - SIGMAS * sigma(0.75, n);
    for (i, model) in [
        AccuracyModel::postulate(delta).unwrap(),
        AccuracyModel::new(delta, 0.75, FailureMode::AdversarialOffset).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let batch = SampleBatch::draw(&sampler, model, n, 606, i as u64, r, s);
        let rate = batch.within_accuracy();
        check(&mut failures, rate >= floor, || format!("{model:?}: {rate} < {floor}"));
    }
    verdict(6, "Pr[|outcome - lambda| <= accuracy] >= 3/4 - 3 sigma over 1e5 trials", &failures, start.elapsed());
}

#[test]
fn criterion_7_separation_and_decay() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (batches, samples) = (200u64, 200usize);

    for (name, input, f) in INSTANCES {
        let spec = load(name);
        let (r, s, d) = instance_scales(&spec, f);
        let sampler = ExactSampler::new(&spectral_model(d));
        let acc = AccuracyModel::postulate(1.0 / (r * s) as f64).unwrap();

        let drawn = draw_batches(&sampler, &acc, samples, batches, 7000, r, s, true);
        let (odd, filtered) = drawn
            .iter()
            .map(|b| decide(b, r, s))
            .fold((0usize, 0usize), |(o, n), x| (o + x.odd_count, n + x.filtered_count));
        let frac = odd as f64 / filtered as f64;
        if f == 1 {
            let floor = ODD_FRACTION_TRUE - SIGMAS * sigma(ODD_FRACTION_TRUE, filtered);
            check(&mut failures, frac >= floor, || format!("{name} x={input}: odd fraction {frac} < {floor}"));
        } else {
            let ceil = ODD_FRACTION_FALSE + SIGMAS * sigma(ODD_FRACTION_FALSE, filtered);
            check(&mut failures, frac <= ceil, || format!("{name} x={input}: odd fraction {frac} > {ceil}"));
        }

        let mut previous = f64::INFINITY;
        for size in [50usize, 100, 200, 400] {
            let results: Vec<_> = draw_batches(&sampler, &acc, size, 1000, 8000 + size as u64, r, s, true)
                .iter()
                .map(|b| decide(b, r, s))
                .collect();
            let wrong = results.iter().filter(|x| x.verdict != f).count() as f64 / results.len() as f64;
            let mean_filtered = results.iter().map(|x| x.filtered_count).sum::<usize>() / results.len();
            let bound = chernoff_confidence(mean_filtered, PROBABILITY_GAP);
            check(&mut failures, wrong <= previous, || {
                format!("{name} x={input}: misclassification rose to {wrong} at n={size}")
            });
            check(&mut failures, wrong <= bound, || {
                format!("{name} x={input}: misclassification {wrong} above Hoeffding {bound} at n={size}")
            });
            previous = wrong;
        }
    }

    let (mut agree, mut total) = (0.0, 0.0);
    for (name, input, f) in INSTANCES {
        let mut config = ExperimentConfig::new(corpus_dir().join(name), input);
        config.samples = samples;
        config.batches = batches;
        config.seed = 9000;
        let report = run_experiment(&config).unwrap().report;
        check(&mut failures, report.ground_truth.f_of_x == f, || format!("{name} x={input}: ground truth"));
        agree += report.agreement_rate * batches as f64;
        total += batches as f64;
    }
    let rate = agree / total;
    check(&mut failures, rate >= MIN_AGREEMENT, || format!("end-to-end agreement {rate} < {MIN_AGREEMENT}"));
    check(&mut failures, start.elapsed() < Duration::from_secs(300), || format!("runtime {:?}", start.elapsed()));
    verdict(7, &format!("decision separation, decay, agreement {rate:.4}"), &failures, start.elapsed());
}

/// Statevector amplitude of outcome `j` after the controlled powers and an
/// explicit inverse DFT.
fn statevector_probability(m: u32, phi: f64, j: usize) -> f64 {
    let size = 1usize << m;
    let (re, im) = (0..size).fold((0.0, 0.0), |(re, im), t| {
        let ang = 2.0 * PI * (phi * t as f64 - (t * j) as f64 / size as f64);
        (re + ang.cos(), im + ang.sin())
    });
    (re * re + im * im) / (size * size) as f64
}

#[test]
fn criterion_8_phase_estimation() {
    let start = Instant::now();
    let mut failures = Vec::new();

    for m in 1..=10u32 {
        let size = 1u64 << m;
        for k in [0, 1, size / 2, size - 1] {
            let p = phase_estimate_distribution(&PhaseEstimationSetup::eigenstate(m, k as f64 / size as f64).unwrap());
            let mass = p[k as usize];
            check(&mut failures, (mass - 1.0).abs() < 1e-12, || format!("m={m} k={k}: mass {mass}"));
        }
    }

    let n = 10_000usize;
    for m in [4u32, 8] {
        let phi = 1.0 / 3.0;
        let setup = PhaseEstimationSetup::eigenstate(m, phi).unwrap();
        let sampler = PhaseSampler::new(&setup);
        let mut rng = orbitmeter::metrology::batch_rng(31, m as u64);
        let mut counts = vec![0usize; sampler.table().len()];
        for _ in 0..n {
            counts[sampler.sample(&mut rng) as usize] += 1;
        }
        let (mut tail_p, mut tail_c) = (0.0, 0usize);
        for (j, (&p, &c)) in sampler.table().iter().zip(&counts).enumerate() {
            if p * n as f64 >= 5.0 {
                let freq = c as f64 / n as f64;
                check(&mut failures, (freq - p).abs() <= SIGMAS * sigma(p, n), || {
                    format!("m={m} j={j}: frequency {freq} vs {p}")
                });
            } else {
                tail_p += p;
                tail_c += c;
            }
        }
        let freq = tail_c as f64 / n as f64;
        check(&mut failures, (freq - tail_p).abs() <= SIGMAS * sigma(tail_p, n).max(1.0 / n as f64), || {
            format!("m={m} pooled tail: {freq} vs {tail_p}")
        });

        let size = 1usize << m;
        let nearest = ((phi * size as f64).round() as usize) % size;
        let oracle = statevector_probability(m, phi, nearest);
        let closed = sampler.table()[nearest];
        check(&mut failures, (closed - oracle).abs() < 1e-12, || {
            format!("m={m}: nearest-grid probability {closed} vs oracle {oracle}")
        });
        check(&mut failures, closed >= 4.0 / (PI * PI), || format!("m={m}: nearest-grid probability {closed}"));
    }
    verdict(8, "phase estimation point masses, sampled law, nearest-grid probability", &failures, start.elapsed());
}

#[test]
fn criterion_9_locality() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for name in MACHINES {
        let spec = load(name);
        let forward = ForwardOperator::new(build_wrapper_circuit(&spec).unwrap());
        let report = locality_report(&forward);
        check(&mut failures, report.max_support == 4 && !report.exceeds_target, || {
            format!("{name}: max support {}", report.max_support)
        });
    }
    verdict(9, "merged-cell wrapper terms are exactly 4-local", &failures, start.elapsed());
}
