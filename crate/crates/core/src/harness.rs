//! End-to-end experiment: parse, check, compile, traverse the clock orbit,
//! sample outcomes at a configured accuracy and decide `f(x)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clockwork::{
    compute_orbit, locality_report, spectral_gap, spectral_model, ClockError, ClockedState, ForwardOperator,
};
use crate::compiler::{
    build_wrapper_circuit_with, expected_orbit_length, machine_register_bits, wrapper_initial_state, CompileError,
};
use crate::metrology::{
    batch_csv, decide, decide_values, draw_batches, AccuracyModel, DecisionResult, ExactSampler, FailureMode,
};
use crate::rtm::{check_reversibility, parse_rtm_spec, run_machine, RtmError, RtmSpec, SymbolId};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pipeline stage a failure is attributed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Parse,
    Reversibility,
    GroundTruth,
    Compile,
    Orbit,
    Spectrum,
    Sampling,
    Decide,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Parse => "parse",
            Stage::Reversibility => "reversibility",
            Stage::GroundTruth => "ground-truth",
            Stage::Compile => "compile",
            Stage::Orbit => "orbit",
            Stage::Spectrum => "spectrum",
            Stage::Sampling => "sampling",
            Stage::Decide => "decide",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Budget,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Validation => 2,
            FailureKind::Budget => 3,
            FailureKind::Io => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct HarnessError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl HarnessError {
    pub fn validation(stage: Stage, message: impl Into<String>) -> Self {
        Self { stage, kind: FailureKind::Validation, message: message.into() }
    }

    pub fn budget(stage: Stage, message: impl Into<String>) -> Self {
        Self { stage, kind: FailureKind::Budget, message: message.into() }
    }

    pub fn io(stage: Stage, message: impl Into<String>) -> Self {
        Self { stage, kind: FailureKind::Io, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn from_compile(stage: Stage, e: CompileError) -> Self {
        match e {
            CompileError::BudgetExhausted { .. } => Self::budget(stage, e.to_string()),
            _ => Self::validation(stage, e.to_string()),
        }
    }

    pub fn from_clock(stage: Stage, e: ClockError) -> Self {
        match e {
            ClockError::BudgetExhausted { .. } => Self::budget(stage, e.to_string()),
            ClockError::Circuit(inner) => Self::from_compile(stage, inner),
            _ => Self::validation(stage, e.to_string()),
        }
    }

    pub fn from_rtm(stage: Stage, e: RtmError) -> Self {
        Self::validation(stage, e.to_string())
    }
}

/// Measurement accuracy: `auto` is `1/(r s)` with `r` from the orbit-length
/// formula at `f = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AccuracyRepr", into = "AccuracyRepr")]
pub enum Accuracy {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AccuracyRepr {
    Value(f64),
    Keyword(Keyword),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Keyword {
    Auto,
}

impl TryFrom<AccuracyRepr> for Accuracy {
    type Error = String;

    fn try_from(repr: AccuracyRepr) -> Result<Self, String> {
        match repr {
            AccuracyRepr::Keyword(Keyword::Auto) => Ok(Accuracy::Auto),
            AccuracyRepr::Value(v) => Accuracy::fixed(v),
        }
    }
}

impl From<Accuracy> for AccuracyRepr {
    fn from(a: Accuracy) -> Self {
        match a {
            Accuracy::Auto => AccuracyRepr::Keyword(Keyword::Auto),
            Accuracy::Fixed(v) => AccuracyRepr::Value(v),
        }
    }
}

impl Accuracy {
    pub fn fixed(v: f64) -> Result<Self, String> {
        if v > 0.0 && v.is_finite() {
            Ok(Accuracy::Fixed(v))
        } else {
            Err(format!("accuracy {v} must be a positive finite number"))
        }
    }
}

impl FromStr for Accuracy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Accuracy::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is neither `auto` nor a number"))?;
        Accuracy::fixed(v)
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accuracy::Auto => f.write_str("auto"),
            Accuracy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_step_budget() -> u64 {
    1 << 20
}

fn default_failure_mode() -> FailureMode {
    FailureMode::UniformFullRange
}

fn default_success_prob() -> f64 {
    crate::metrology::POSTULATE_SUCCESS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_path: PathBuf,
    pub input: String,
    pub accuracy: Accuracy,
    pub samples: usize,
    pub batches: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub merge_cells: bool,
    #[serde(default = "default_true")]
    pub parallel: bool,
    #[serde(default = "default_success_prob")]
    pub success_prob: f64,
    #[serde(default = "default_failure_mode")]
    pub failure_mode: FailureMode,
    /// Machine steps allowed when computing the ground truth.
    #[serde(default = "default_step_budget")]
    pub step_budget: u64,
    /// Applications of `F` allowed; `None` means `2 s r + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(spec_path: impl Into<PathBuf>, input: impl Into<String>) -> Self {
        Self {
            spec_path: spec_path.into(),
            input: input.into(),
            accuracy: Accuracy::Auto,
            samples: 200,
            batches: 1,
            seed: 0,
            out_dir: None,
            merge_cells: true,
            parallel: true,
            success_prob: default_success_prob(),
            failure_mode: default_failure_mode(),
            step_budget: default_step_budget(),
            orbit_budget: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::validation(Stage::Config, e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(Stage::Config, format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples == 0 {
            return Err(HarnessError::validation(Stage::Config, "samples must be at least 1"));
        }
        if self.batches == 0 {
            return Err(HarnessError::validation(Stage::Config, "batches must be at least 1"));
        }
        if let Accuracy::Fixed(v) = self.accuracy {
            Accuracy::fixed(v).map_err(|e| HarnessError::validation(Stage::Config, e))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MachineSummary {
    pub states: usize,
    pub symbols: usize,
    pub tape_cells: usize,
    pub result_cell: usize,
    pub m: u32,
    pub s: usize,
    pub wires: usize,
    pub merged: bool,
    pub locality_max_support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    pub f_of_x: u8,
    pub halted: bool,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSummary {
    /// `2(2^{m+1} - 1)`.
    pub r_formula: u64,
    /// `d / s`.
    pub r_observed: u64,
    pub d: u64,
    /// 1 when `d = 2 s r_formula`.
    pub f_from_orbit: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub distinct_eigenvalues: usize,
    pub gap: f64,
    pub probability_sum: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracySummary {
    pub delta: f64,
    pub auto_delta: f64,
    /// Set when `delta > auto_delta`: the filter no longer guarantees the
    /// correct grid index for in-accuracy outcomes.
    pub coarser_than_auto: bool,
    pub success_prob: f64,
    pub failure_mode: FailureMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchSummary {
    pub batch_index: u64,
    pub seed: u64,
    pub decision: DecisionResult,
}

/// Everything here is a function of the config; wall-clock timing lives in
/// [`Timing`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub tool: ToolInfo,
    pub config: ExperimentConfig,
    pub machine: MachineSummary,
    pub ground_truth: GroundTruth,
    pub orbit: OrbitSummary,
    pub spectrum: SpectralSummary,
    pub accuracy: AccuracySummary,
    /// Decision over all batches pooled.
    pub decision: DecisionResult,
    pub agreement: bool,
    /// Fraction of batches whose own verdict equals `f(x)`.
    pub agreement_rate: f64,
    pub inconclusive_batches: u64,
    pub batches: Vec<BatchSummary>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

/// Report plus side-file contents.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub samples_csv: String,
    pub batches_csv: String,
    pub spectrum_csv: String,
    pub timing: Timing,
}

struct Clock {
    start: Instant,
    last: Instant,
    timing: Timing,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, timing: Timing::default() }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timing.stages.push((stage.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(mut self) -> Timing {
        self.timing.total_seconds = self.start.elapsed().as_secs_f64();
        self.timing
    }
}

pub fn load_spec(path: &Path) -> Result<RtmSpec, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(Stage::Parse, format!("{}: {e}", path.display())))?;
    parse_rtm_spec(&text).map_err(|e| HarnessError::validation(Stage::Parse, e.to_string()))
}

/// Fails unless the machine is reversible and in the compilable normal form.
pub fn ensure_reversible(spec: &RtmSpec) -> Result<(), HarnessError> {
    let report = check_reversibility(spec);
    if report.is_compilable() {
        return Ok(());
    }
    let issues: Vec<String> = report
        .violations
        .iter()
        .map(ToString::to_string)
        .chain(report.normal_form.iter().map(ToString::to_string))
        .collect();
    Err(HarnessError::validation(Stage::Reversibility, issues.join("; ")))
}

/// Compiled wrapper facts and the clock orbit through `|x>|0...0>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracedInstance {
    pub m: u32,
    pub s: usize,
    pub wires: usize,
    pub locality_max_support: usize,
    pub orbit: OrbitSummary,
}

/// Compiles the wrapper and traverses the orbit of `F`. The default budget
/// `2 s r + 1` covers both possible orbit lengths.
pub fn trace_instance(
    spec: &RtmSpec,
    tape: &[SymbolId],
    merged: bool,
    budget: Option<u64>,
) -> Result<TracedInstance, HarnessError> {
    let m = machine_register_bits(spec).map_err(|e| HarnessError::from_compile(Stage::Compile, e))?;
    let circuit = build_wrapper_circuit_with(spec, merged).map_err(|e| HarnessError::from_compile(Stage::Compile, e))?;
    let initial =
        wrapper_initial_state(spec, circuit.layout(), tape).map_err(|e| HarnessError::from_compile(Stage::Compile, e))?;
    let wires = circuit.layout().wire_count();
    let s = circuit.s();

    let forward = ForwardOperator::new(circuit);
    let locality_max_support = locality_report(&forward).max_support;
    let r_formula = expected_orbit_length(m, 0);
    let budget = budget.unwrap_or(2 * s as u64 * r_formula + 1);
    let orbit = compute_orbit(&forward, &ClockedState::new(initial, 1), budget)
        .map_err(|e| HarnessError::from_clock(Stage::Orbit, e))?;
    let d = orbit.d;
    Ok(TracedInstance {
        m,
        s,
        wires,
        locality_max_support,
        orbit: OrbitSummary {
            r_formula,
            r_observed: d / s as u64,
            d,
            f_from_orbit: u8::from(d == 2 * s as u64 * r_formula),
        },
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun, HarnessError> {
    config.validate()?;
    let mut clock = Clock::new();

    let spec = load_spec(&config.spec_path)?;
    let tape = spec.encode_input(&config.input).map_err(|e| HarnessError::from_rtm(Stage::Parse, e))?;
    clock.lap(Stage::Parse);

    ensure_reversible(&spec)?;
    clock.lap(Stage::Reversibility);

    let run = run_machine(&spec, &tape, config.step_budget).map_err(|e| HarnessError::from_rtm(Stage::GroundTruth, e))?;
    if run.budget_exhausted {
        return Err(HarnessError::budget(
            Stage::GroundTruth,
            format!("machine did not halt within {} steps", config.step_budget),
        ));
    }
    clock.lap(Stage::GroundTruth);

    let traced = trace_instance(&spec, &tape, config.merge_cells, config.orbit_budget)?;
    clock.lap(Stage::Orbit);
    let (m, s, wires) = (traced.m, traced.s, traced.wires);
    let r_formula = traced.orbit.r_formula;
    let d = traced.orbit.d;
    let orbit_summary = traced.orbit.clone();

    let model = spectral_model(d);
    let spectrum = SpectralSummary {
        distinct_eigenvalues: model.entries.len(),
        gap: spectral_gap(d),
        probability_sum: model.probability_sum().to_string(),
    };
    let spectrum_csv = model.to_csv();
    clock.lap(Stage::Spectrum);

    let rs = r_formula * s as u64;
    let auto_delta = 1.0 / rs as f64;
    let delta = match config.accuracy {
        Accuracy::Auto => auto_delta,
        Accuracy::Fixed(v) => v,
    };
    let accuracy = AccuracyModel::new(delta, config.success_prob, config.failure_mode)
        .map_err(|e| HarnessError::validation(Stage::Sampling, e.to_string()))?;
    let sampler = ExactSampler::new(&model);
    let batches = draw_batches(
        &sampler,
        &accuracy,
        config.samples,
        config.batches,
        config.seed,
        r_formula,
        s as u64,
        config.parallel,
    );
    clock.lap(Stage::Sampling);

    let per_batch: Vec<BatchSummary> = batches
        .iter()
        .map(|b| BatchSummary { batch_index: b.batch_index, seed: b.seed, decision: decide(b, r_formula, s as u64) })
        .collect();
    let pooled: Vec<f64> = batches.iter().flat_map(|b| b.values.iter().copied()).collect();
    let decision = decide_values(&pooled, r_formula, s as u64);
    let agreeing = per_batch.iter().filter(|b| b.decision.verdict == run.f_of_x).count();
    let inconclusive_batches = per_batch.iter().filter(|b| b.decision.inconclusive).count() as u64;
    let samples_csv = samples_csv(&batches, r_formula, s as u64);
    let batches_csv = batches_csv(&per_batch);
    clock.lap(Stage::Decide);

    let mut echoed = config.clone();
    echoed.out_dir = None;
    let report = ExperimentReport {
        tool: ToolInfo { name: TOOL_NAME.into(), version: TOOL_VERSION.into() },
        config: echoed,
        machine: MachineSummary {
            states: spec.state_count(),
            symbols: spec.symbol_count(),
            tape_cells: spec.tape_cells(),
            result_cell: spec.result_cell(),
            m,
            s,
            wires,
            merged: config.merge_cells,
            locality_max_support: traced.locality_max_support,
        },
        ground_truth: GroundTruth { f_of_x: run.f_of_x, halted: run.halted, steps: run.steps_used },
        orbit: orbit_summary,
        spectrum,
        accuracy: AccuracySummary {
            delta,
            auto_delta,
            coarser_than_auto: delta > auto_delta,
            success_prob: config.success_prob,
            failure_mode: config.failure_mode,
        },
        agreement: decision.verdict == run.f_of_x,
        decision,
        agreement_rate: agreeing as f64 / per_batch.len() as f64,
        inconclusive_batches,
        batches: per_batch,
    };
    Ok(ExperimentRun { report, samples_csv, batches_csv, spectrum_csv, timing: clock.finish() })
}

fn samples_csv(batches: &[crate::metrology::SampleBatch], r: u64, s: u64) -> String {
    let mut out = String::from("batch,trial,raw_value,filtered,j,parity\n");
    for b in batches {
        for line in batch_csv(&b.values, r, s).lines().skip(1) {
            out.push_str(&format!("{},{line}\n", b.batch_index));
        }
    }
    out
}

fn batches_csv(batches: &[BatchSummary]) -> String {
    let mut out = String::from("batch,seed,verdict,total,filtered_count,odd_count,odd_fraction,inconclusive\n");
    for b in batches {
        let d = &b.decision;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            b.batch_index, b.seed, d.verdict, d.total, d.filtered_count, d.odd_count, d.odd_fraction, d.inconclusive
        ));
    }
    out
}

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const BATCHES_FILE: &str = "batches.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";

/// Writes the report and side files into `dir`, creating it if needed.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::io(Stage::Output, format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let timing = serde_json::to_string_pretty(&run.timing).expect("timing serializes");
    for (name, body) in [
        (REPORT_FILE, run.report.to_json()),
        (SAMPLES_FILE, run.samples_csv.clone()),
        (BATCHES_FILE, run.batches_csv.clone()),
        (SPECTRUM_FILE, run.spectrum_csv.clone()),
        (TIMING_FILE, timing + "\n"),
    ] {
        std::fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok(())
}
