use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use orbitmeter::clockwork::spectral_model;
use orbitmeter::compiler::{build_step_circuit_with, build_wrapper_circuit_with};
use orbitmeter::harness::{
    ensure_reversible, load_spec, run_experiment, trace_instance, write_outputs, Accuracy, ExperimentConfig,
    HarnessError, Stage,
};
use orbitmeter::metrology::{
    batch_csv, decide_values, AccuracyModel, ExactSampler, PhaseEstimationSetup, PhaseSampler, SampleBatch,
    FailureMode, batch_rng, phase_estimate_distribution,
};
use orbitmeter::rtm::{check_reversibility, RtmSpec, SymbolId};

#[derive(Parser)]
#[command(name = "orbitmeter", version, about = "Reversible machines, clock orbits and accuracy-limited decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reversibility and normal-form report for a machine (JSON).
    Validate { spec: PathBuf },
    /// Compiles the wrapper (or step) circuit and dumps it as JSON.
    Compile {
        spec: PathBuf,
        #[arg(long)]
        step: bool,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Traverses the clock orbit through |x>|0...0> (JSON summary).
    Orbit {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Spectral table of the clock observable restricted to the orbit (CSV).
    Spectrum {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        d: Option<u64>,
        #[arg(long, requires = "input")]
        spec: Option<PathBuf>,
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draws accuracy-limited outcomes for an instance (CSV).
    Sample {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filters and rounds outcomes from a sample CSV and decides f(x) (JSON).
    Decide {
        values: PathBuf,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        s: u64,
    },
    /// Exact or sampled phase-estimation outcome table (CSV).
    PhaseEstimate {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        phase: f64,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs the full pipeline from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        batches: Option<u64>,
        #[arg(long)]
        accuracy: Option<Accuracy>,
        #[arg(long)]
        no_merge_cells: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LayoutArgs {
    /// One wire per register instead of the merged four-local layout.
    #[arg(long)]
    no_merge_cells: bool,
}

#[derive(Args)]
struct InstanceArgs {
    spec: PathBuf,
    #[arg(long)]
    input: String,
    #[command(flatten)]
    layout: LayoutArgs,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value = "auto")]
    accuracy: Accuracy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(h) = e.downcast_ref::<HarnessError>() {
        return h.exit_code() as u8;
    }
    if e.chain().any(|c| c.is::<std::io::Error>()) {
        return 4;
    }
    2
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate { spec } => validate(&spec),
        Command::Compile { spec, step, layout, out } => {
            let spec = load_checked(&spec)?;
            let merged = !layout.no_merge_cells;
            let circuit = if step { build_step_circuit_with(&spec, merged) } else { build_wrapper_circuit_with(&spec, merged) }
                .map_err(|e| HarnessError::from_compile(Stage::Compile, e))?;
            emit(out.as_deref(), &(circuit.to_json() + "\n"))
        }
        Command::Orbit { instance, budget } => {
            let (spec, tape) = load_instance(&instance)?;
            let traced = trace_instance(&spec, &tape, !instance.layout.no_merge_cells, budget)?;
            emit(None, &(serde_json::to_string_pretty(&traced)? + "\n"))
        }
        Command::Spectrum { d, spec, input, layout, out } => {
            let d = match (d, spec) {
                (Some(d), _) => d,
                (None, Some(path)) => {
                    let instance = InstanceArgs { spec: path, input: input.unwrap_or_default(), layout };
                    let (spec, tape) = load_instance(&instance)?;
                    trace_instance(&spec, &tape, !instance.layout.no_merge_cells, None)?.orbit.d
                }
                (None, None) => bail!("either --d or --spec is required"),
            };
            if d == 0 {
                return Err(HarnessError::validation(Stage::Spectrum, "d must be at least 1").into());
            }
            emit(out.as_deref(), &spectral_model(d).to_csv())
        }
        Command::Sample { instance, sampling, out } => sample(&instance, &sampling, out.as_deref()),
        Command::Decide { values, r, s } => {
            if r == 0 || s == 0 {
                return Err(HarnessError::validation(Stage::Decide, "r and s must be positive").into());
            }
            let text = std::fs::read_to_string(&values).with_context(|| format!("reading {}", values.display()))?;
            let values = raw_values(&text)?;
            emit(None, &(serde_json::to_string_pretty(&decide_values(&values, r, s))? + "\n"))
        }
        Command::PhaseEstimate { m, phase, samples, seed } => phase_estimate(m, phase, samples, seed),
        Command::Experiment { config, seed, samples, batches, accuracy, no_merge_cells, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(samples) = samples {
                cfg.samples = samples;
            }
            if let Some(batches) = batches {
                cfg.batches = batches;
            }
            if let Some(accuracy) = accuracy {
                cfg.accuracy = accuracy;
            }
            if no_merge_cells {
                cfg.merge_cells = false;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            let run = run_experiment(&cfg)?;
            match &cfg.out_dir {
                Some(dir) => {
                    write_outputs(&run, dir)?;
                    let r = &run.report;
                    eprintln!(
                        "f(x) = {}, verdict = {}, agreement = {}, batch agreement rate = {}",
                        r.ground_truth.f_of_x, r.decision.verdict, r.agreement, r.agreement_rate
                    );
                    Ok(())
                }
                None => emit(None, &run.report.to_json()),
            }
        }
    }
}

fn validate(path: &Path) -> Result<()> {
    let spec = load_spec(path)?;
    let report = check_reversibility(&spec);
    emit(None, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if !report.is_compilable() {
        return Err(HarnessError::validation(Stage::Reversibility, "machine is not compilable").into());
    }
    Ok(())
}

fn load_checked(path: &Path) -> Result<RtmSpec> {
    let spec = load_spec(path)?;
    ensure_reversible(&spec)?;
    Ok(spec)
}

fn load_instance(args: &InstanceArgs) -> Result<(RtmSpec, Vec<SymbolId>)> {
    let spec = load_checked(&args.spec)?;
    let tape = spec.encode_input(&args.input).map_err(|e| HarnessError::from_rtm(Stage::Parse, e))?;
    Ok((spec, tape))
}

fn sample(instance: &InstanceArgs, sampling: &SamplingArgs, out: Option<&Path>) -> Result<()> {
    if sampling.samples == 0 {
        return Err(HarnessError::validation(Stage::Config, "samples must be at least 1").into());
    }
    let (spec, tape) = load_instance(instance)?;
    let traced = trace_instance(&spec, &tape, !instance.layout.no_merge_cells, None)?;
    let (r, s) = (traced.orbit.r_formula, traced.s as u64);
    let delta = match sampling.accuracy {
        Accuracy::Auto => 1.0 / (r * s) as f64,
        Accuracy::Fixed(v) => v,
    };
    let model = AccuracyModel::new(delta, orbitmeter::metrology::POSTULATE_SUCCESS, FailureMode::UniformFullRange)
        .map_err(|e| HarnessError::validation(Stage::Sampling, e.to_string()))?;
    let sampler = ExactSampler::new(&spectral_model(traced.orbit.d));
    let batch = SampleBatch::draw(&sampler, &model, sampling.samples, sampling.seed, 0, r, s);
    eprintln!("d = {}, r = {r}, s = {s}, accuracy = {delta}", traced.orbit.d);
    emit(out, &batch_csv(&batch.values, r, s))
}

/// The `raw_value` column of a sample CSV.
fn raw_values(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty sample file")?;
    let col = header
        .split(',')
        .position(|h| h.trim() == "raw_value")
        .ok_or_else(|| HarnessError::validation(Stage::Decide, "no raw_value column"))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let field = l.split(',').nth(col).unwrap_or("");
            field.trim().parse::<f64>().map_err(|_| {
                HarnessError::validation(Stage::Decide, format!("row {}: bad raw_value `{field}`", i + 1)).into()
            })
        })
        .collect()
}

fn phase_estimate(m: u32, phase: f64, samples: usize, seed: u64) -> Result<()> {
    let setup = PhaseEstimationSetup::eigenstate(m, phase)
        .map_err(|e| HarnessError::validation(Stage::Config, e.to_string()))?;
    let mut out = String::new();
    if samples == 0 {
        out.push_str("j,probability\n");
        for (j, p) in phase_estimate_distribution(&setup).iter().enumerate() {
            writeln!(out, "{j},{p}")?;
        }
    } else {
        let sampler = PhaseSampler::new(&setup);
        let mut rng = batch_rng(seed, 0);
        let mut counts = vec![0u64; sampler.table().len()];
        for _ in 0..samples {
            counts[sampler.sample(&mut rng) as usize] += 1;
        }
        out.push_str("j,probability,count\n");
        for (j, (p, c)) in sampler.table().iter().zip(&counts).enumerate() {
            writeln!(out, "{j},{p},{c}")?;
        }
    }
    emit(None, &out)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| HarnessError::io(Stage::Output, format!("{}: {e}", path.display())).into()),
        None => {
            std::io::stdout().lock().write_all(body.as_bytes()).context("writing to stdout")?;
            Ok(())
        }
    }
}
