//! `cvqnn` command-line driver.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad flags or
//! configuration, 3 unreadable data or artifact, 4 training diverged.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cvqnn::appendix::{google_report, qiskit_report};
use cvqnn::dataio::{load_mnist, select_balanced, select_held_out, Dataset};
use cvqnn::gates::gate_unitarity_report;
use cvqnn::qnn::{evaluate, train_with, HybridModelConfig, LossKind, Readout, TrainOptions, TrainingHistory};
use cvqnn::wigner::wigner_grid;
use cvqnn::{Cutoff, Error};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "cvqnn",
    version,
    about = "Continuous-variable quantum neural network simulator",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a hybrid classifier on an MNIST slice and write a JSON run artifact.
    Train(TrainArgs),
    /// Recompute accuracy of a run artifact on its training slice or a held-out slice.
    Eval(EvalArgs),
    /// Run the gate-family verification report.
    Gates(GatesArgs),
    /// Write the Wigner function of a Fock state as CSV.
    Wigner(WignerArgs),
    /// Print the qubit classifier verification reports.
    Appendix(AppendixArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LossFlag {
    Xent,
    Mse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MeasurementFlag {
    Probability,
    Expectation,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct TrainArgs {
    #[arg(long, default_value_t = 2)]
    qumodes: usize,
    #[arg(long, default_value_t = 2)]
    cutoff: usize,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 600)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 0.02)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, value_enum, default_value_t = LossFlag::Xent)]
    loss: LossFlag,
    #[arg(long, value_enum, default_value_t = MeasurementFlag::Probability)]
    measurement: MeasurementFlag,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Hidden encoder widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "32")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = HybridModelConfig::DEFAULT_BATCH)]
    batch_size: usize,
    /// Directory holding train-images-idx3-ubyte[.gz] and train-labels-idx1-ubyte[.gz].
    #[arg(long)]
    mnist_dir: PathBuf,
    #[arg(long, default_value = "run.json")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    #[serde(skip)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Slice {
    Train,
    Heldout,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    artifact: PathBuf,
    #[arg(long)]
    mnist_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Slice::Heldout)]
    slice: Slice,
    /// Held-out slice size; defaults to the training sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Held-out selection seed; defaults to the training seed plus one.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    Unitarity,
}

#[derive(Args)]
struct GatesArgs {
    #[arg(long, value_enum, default_value_t = Check::Unitarity)]
    check: Check,
    #[arg(long, default_value_t = 16)]
    cutoff: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct WignerArgs {
    #[arg(long)]
    fock: usize,
    #[arg(long, default_value_t = 4.0)]
    range: f64,
    /// Odd number of grid points per axis.
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Demo {
    Google,
    Qiskit,
}

#[derive(Args)]
struct AppendixArgs {
    #[arg(long, value_enum)]
    demo: Demo,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

/// The JSON document written by `train` and read by `eval`.
#[derive(Serialize, Deserialize)]
struct RunArtifact {
    tool: String,
    version: String,
    invocation: TrainArgs,
    /// Class-balanced training slice, as indices into the loaded MNIST files.
    selection: Vec<usize>,
    history: TrainingHistory,
    wall_time_seconds: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn data(context: &str, err: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_DATA, format!("{context}: {err}"))
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Divergence { .. } => EXIT_DIVERGED,
            Error::Io(_) | Error::Idx(_) | Error::InsufficientSamples { .. } => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Failure::new(code, err.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn load_data(dir: &Path) -> Result<Dataset, Failure> {
    load_mnist(dir).map_err(|e| Failure::data(&format!("cannot load MNIST from {}", dir.display()), e))
}

fn model_config(args: &TrainArgs) -> HybridModelConfig {
    let mut config = HybridModelConfig::new(args.qumodes, args.cutoff, args.layers, args.classes)
        .with_encoder(cvqnn::dataio::IMAGE_PIXELS, &args.hidden);
    config.measurement = match args.measurement {
        MeasurementFlag::Probability => Readout::Probability,
        MeasurementFlag::Expectation => Readout::ExpectationX,
    };
    config.loss = match args.loss {
        LossFlag::Xent => LossKind::CategoricalCrossentropy,
        LossFlag::Mse => LossKind::Mse,
    };
    config.lr = args.lr;
    config.epochs = args.epochs;
    config.seed = args.seed;
    config.samples = args.samples;
    config.batch_size = args.batch_size;
    config
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let start = Instant::now();
    let config = model_config(&args);
    config.validate()?;
    if args.workers == Some(0) {
        return Err(Failure::new(EXIT_USAGE, "--workers must be at least 1"));
    }
    let full = load_data(&args.mnist_dir)?;
    let selection = select_balanced(&full, args.samples, args.classes, args.seed)?;
    let data = full.subset(&selection)?;
    let options = TrainOptions {
        workers: args.workers,
        initial: None,
    };
    let history = train_with(&config, &data, &options, |r| {
        println!("epoch={} loss={:.6} acc={:.4}", r.epoch, r.loss, r.accuracy);
    })?;
    let artifact = RunArtifact {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        invocation: args,
        selection,
        history,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let out = &artifact.invocation.out;
    let file = fs::File::create(out).map_err(|e| Failure::data(&format!("cannot write {}", out.display()), e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &artifact)
        .map_err(|e| Failure::data(&format!("cannot write {}", out.display()), e))?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let text = fs::read_to_string(&args.artifact)
        .map_err(|e| Failure::data(&format!("cannot read {}", args.artifact.display()), e))?;
    let artifact: RunArtifact = serde_json::from_str(&text)
        .map_err(|e| Failure::data(&format!("malformed artifact {}", args.artifact.display()), e))?;
    let config = &artifact.history.config;
    artifact
        .history
        .final_params
        .check(config)
        .map_err(|e| Failure::data("artifact parameters do not match its config", e))?;
    let full = load_data(&args.mnist_dir)?;
    let indices = match args.slice {
        Slice::Train => artifact.selection.clone(),
        Slice::Heldout => select_held_out(
            &full,
            &artifact.selection,
            args.samples.unwrap_or(config.samples),
            config.classes,
            args.seed.unwrap_or(config.seed.wrapping_add(1)),
        )?,
    };
    if indices.iter().any(|&i| i >= full.len()) {
        return Err(Failure::data("artifact selection", "index beyond the loaded dataset"));
    }
    let data = full.subset(&indices)?;
    let result = evaluate(config, &artifact.history.final_params, &data)?;
    println!("samples={} loss={:.6} acc={}", data.len(), result.loss, result.accuracy);
    Ok(0)
}

fn cmd_gates(args: GatesArgs) -> CmdResult {
    match args.check {
        Check::Unitarity => {
            let report = gate_unitarity_report(Cutoff::new(args.cutoff)?, args.trials, args.seed)?;
            println!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn cmd_wigner(args: WignerArgs) -> CmdResult {
    let grid = wigner_grid(args.fock, args.range, args.points)?;
    let file =
        fs::File::create(&args.out).map_err(|e| Failure::data(&format!("cannot write {}", args.out.display()), e))?;
    grid.write_csv(BufWriter::new(file))
        .map_err(|e| Failure::data(&format!("cannot write {}", args.out.display()), e))?;
    println!(
        "fock={} points={} rows={} min_w={:.6e} max_deviation={:.3e}",
        grid.fock,
        args.points,
        args.points * args.points,
        grid.min(),
        grid.max_closed_form_deviation
    );
    Ok(0)
}

fn cmd_appendix(args: AppendixArgs) -> CmdResult {
    match args.demo {
        Demo::Google => {
            let report = google_report(args.seed, args.trials)?;
            println!("{report}");
            Ok(if report.simulators_agree() { 0 } else { EXIT_CHECK_FAILED })
        }
        Demo::Qiskit => {
            println!("R_y(theta) H |0> head, central difference of p1 at delta 1e-4");
            println!("{:<12} {:<12} {:<12} {:<14} {:<14}", "theta", "p0", "p1", "dp1 (diff)", "cos(theta)/2");
            for row in qiskit_report(args.seed, args.trials, 1e-4)? {
                println!(
                    "{:<12.6} {:<12.6} {:<12.6} {:<14.8} {:<14.8}",
                    row.theta, row.p0, row.p1, row.grad_p1, row.analytic_grad_p1
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Gates(a) => cmd_gates(a),
        Command::Wigner(a) => cmd_wigner(a),
        Command::Appendix(a) => cmd_appendix(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
