// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use adp_core::graph::{build_knn_gaussian, KnnParams, SigmaMode, SigmaPolicy};
use adp_core::harness::{self, Method, TrialPlan};
use adp_core::io;
use adp_core::propagation::one_hot;
use adp_core::solver::{AdpConfig, OuterRecord, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_MAX_OUTER};
use adp_core::synth::{self, SynthKind, SynthParams};
use adp_core::{Error, Matrix};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "adp",
    version,
    about = "Graph-based semi-supervised classification by alternating diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one dataset given a partial labeling.
    Fit(FitArgs),
    /// Run seeded trials with random label masks and report accuracy.
    Benchmark(BenchmarkArgs),
    /// Compare iterative affinity diffusion against its closed form.
    OracleCheck(OracleArgs),
    /// Write a synthetic dataset as features and truth CSV files.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long = "ksigma", default_value_t = 27)]
    k_sigma: usize,
    #[arg(long, default_value = "adaptive")]
    sigma_mode: SigmaMode,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTER)]
    max_outer: usize,
    /// Exit with status 3 when any iteration limit is hit.
    #[arg(long)]
    strict: bool,
}

impl ModelArgs {
    fn knn(&self) -> KnnParams {
        KnnParams {
            k: self.k,
            k_sigma: self.k_sigma,
            sigma_mode: self.sigma_mode,
            ..KnnParams::default()
        }
    }

    fn solver(&self) -> AdpConfig {
        AdpConfig {
            alpha: self.alpha,
            beta: self.beta,
            max_outer: self.max_outer,
            ..AdpConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    features: PathBuf,
    /// One integer class per row, -1 for unlabeled.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the learned affinity matrix as CSV (adp and adp1 only).
    #[arg(long)]
    affinity_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    delta: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    /// Per-trial residual traces as `trial,iteration,residual` rows.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Largest graph size; sizes are drawn from 3..=n.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Features file followed by truth file.
    #[arg(long, num_args = 2, value_names = ["FEATURES", "TRUTH"])]
    out: Vec<PathBuf>,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    method: Method,
    knn: KnnParams,
    solver: AdpConfig,
    sigma_policy: &'a SigmaPolicy,
    predictions: Vec<Option<usize>>,
    scores: &'a Matrix,
    converged: bool,
    iterations: usize,
    residual_trace: &'a [f64],
    rounds: &'a [OuterRecord],
    disconnected: &'a [usize],
}

enum Failure {
    Error(Error),
    NotConverged(String),
    OracleMismatch(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    let data = io::read_features(&args.features)?;
    let labels = io::read_labels(&args.labels)?;
    if labels.len() != data.len() {
        return Err(Error::Validation(format!(
            "{} labels for {} points",
            labels.len(),
            data.len()
        ))
        .into());
    }
    let classes = labels.iter().flatten().max().map_or(1, |&c| c + 1);
    let y = one_hot(&labels, classes)?;
    let knn = args.model.knn();
    let solver = args.model.solver();
    let graph = build_knn_gaussian(&data, &knn)?;
    let out = harness::run_method(args.method, &graph, &y, &solver)?;

    if let (Some(path), Some(a)) = (&args.affinity_out, &out.affinity) {
        io::write_matrix_file(path, a)?;
    }
    write_json(
        &args.out,
        &FitOutput {
            method: args.method,
            knn,
            solver,
            sigma_policy: graph.sigma_policy(),
            predictions: out.predictions.clone(),
            scores: &out.scores,
            converged: out.converged,
            iterations: out.iterations,
            residual_trace: &out.residual_trace,
            rounds: &out.rounds,
            disconnected: &out.disconnected,
        },
    )?;
    if args.model.strict && !out.converged {
        return Err(Failure::NotConverged(format!(
            "{} stopped after {} iterations",
            args.method, out.iterations
        )));
    }
    Ok(())
}

fn benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let plan = TrialPlan {
        features: args.features,
        truth: args.truth,
        delta: args.delta,
        trials: args.trials,
        seed: args.seed,
        method: args.method,
        knn: args.model.knn(),
        solver: args.model.solver(),
    };
    let report = harness::run_trials(&plan)?;
    fs::write(&args.out, report.to_json()?).map_err(Error::from)?;
    if let Some(path) = &args.trace_csv {
        report.write_trace_csv(fs::File::create(path).map_err(Error::from)?)?;
    }
    println!(
        "{} over {} trials: mean accuracy {:.4}, std {:.4}",
        plan.method, plan.trials, report.body.mean_accuracy, report.body.std_accuracy
    );
    let stalled: Vec<usize> = report
        .body
        .trials
        .iter()
        .filter(|t| !t.converged)
        .map(|t| t.trial)
        .collect();
    if args.model.strict && !stalled.is_empty() {
        return Err(Failure::NotConverged(format!(
            "trials {stalled:?} hit an iteration limit"
        )));
    }
    Ok(())
}

fn oracle_check(args: OracleArgs) -> Result<(), Failure> {
    let cases = harness::oracle_check(args.n, args.cases, args.tol, args.seed)?;
    for (i, c) in cases.iter().enumerate() {
        println!(
            "case {i:>3}  n={:<2} alpha={:<4} gap={:.3e} iters={:<6} {}",
            c.n,
            c.alpha,
            c.relative_gap,
            c.iterations,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    let failed = cases.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::OracleMismatch(failed));
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let (data, truth) = synth::generate(&SynthParams {
        kind: args.kind,
        n: args.n,
        classes: args.classes,
        noise: args.noise,
        seed: args.seed,
    })?;
    io::write_matrix_file(&args.out[0], data.features())?;
    let truth: Vec<Option<usize>> = truth.into_iter().map(Some).collect();
    io::write_labels_file(&args.out[1], &truth)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Benchmark(a) => benchmark(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_VALIDATION
            })
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::OracleMismatch(n)) => {
            eprintln!("{n} oracle case(s) exceeded the tolerance");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
