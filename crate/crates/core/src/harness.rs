// SPDX-License-Identifier: Apache-2.0

//! Seeded benchmark trials.
//!
//! Label masks come from SplitMix64 (Steele, Lea & Flood 2014) seeded with
//! `base_seed + trial`: within each class, in ascending class order, the
//! members (ascending index) are partially Fisher-Yates shuffled, drawing
//! position `i + (next_u64() mod (m − i))` for `i = 0..δ`. The first `δ`
//! entries are the labeled points. This is enough to reproduce a mask in
//! any language.

use std::path::PathBuf;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    closed_form_affinity, diffuse_to_convergence, label_similarity_from_scores, DiffusionParams,
};
use crate::error::{Error, Result};
use crate::graph::{build_knn_gaussian, Dataset, KnnParams, WeightGraph};
use crate::io;
use crate::numerics::{frobenius_distance, Matrix};
use crate::propagation::{gfhf, one_hot, predict, LabelMatrix};
use crate::solver::{adp, adp1, lgc_baseline, AdpConfig, OuterRecord, Variant};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Adp,
    Adp1,
    Lgc,
    Gfhf,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adp" => Ok(Method::Adp),
            "adp1" => Ok(Method::Adp1),
            "lgc" => Ok(Method::Lgc),
            "gfhf" => Ok(Method::Gfhf),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Adp => "adp",
            Method::Adp1 => "adp1",
            Method::Lgc => "lgc",
            Method::Gfhf => "gfhf",
        })
    }
}

/// What one method run produced, in a method-independent shape.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub scores: Matrix,
    pub predictions: Vec<Option<usize>>,
    /// Outer rounds for the diffusion solvers, propagation steps for LGC, 0 for GFHF.
    pub iterations: usize,
    pub converged: bool,
    pub residual_trace: Vec<f64>,
    pub rounds: Vec<OuterRecord>,
    pub affinity: Option<Matrix>,
    /// Points with no path to any labeled point.
    pub disconnected: Vec<usize>,
}

pub fn run_method(
    method: Method,
    w: &WeightGraph,
    y: &LabelMatrix,
    cfg: &AdpConfig,
) -> Result<MethodOutcome> {
    match method {
        Method::Adp | Method::Adp1 => {
            let cfg = AdpConfig {
                variant: if method == Method::Adp {
                    Variant::Alternating
                } else {
                    Variant::Joint
                },
                ..*cfg
            };
            let out = if method == Method::Adp {
                adp(w, y, &cfg)?
            } else {
                adp1(w, y, &cfg)?
            };
            Ok(MethodOutcome {
                predictions: predict(&out.f.f),
                disconnected: out.f.disconnected,
                scores: out.f.f,
                iterations: out.outer_iterations,
                converged: out.converged,
                residual_trace: out.outer_residuals,
                rounds: out.rounds,
                affinity: Some(out.a.a),
            })
        }
        Method::Lgc => {
            let out = lgc_baseline(w, y, cfg)?;
            Ok(MethodOutcome {
                predictions: predict(&out.f),
                disconnected: out.disconnected,
                scores: out.f,
                iterations: out.iterations,
                converged: out.converged,
                residual_trace: out.residual_trace,
                rounds: Vec::new(),
                affinity: None,
            })
        }
        Method::Gfhf => {
            let out = gfhf(w, y)?;
            Ok(MethodOutcome {
                predictions: predict(&out.f),
                scores: out.f,
                iterations: 0,
                converged: true,
                disconnected: out.disconnected,
                residual_trace: Vec::new(),
                rounds: Vec::new(),
                affinity: None,
            })
        }
    }
}

/// Picks exactly `delta` labeled points per class; see the module docs for
/// the exact sampling procedure.
pub fn sample_labels(truth: &[usize], delta: usize, seed: u64) -> Result<LabelMatrix> {
    if delta == 0 {
        return Err(Error::InvalidParameter("delta must be at least 1".into()));
    }
    let classes = truth.iter().max().map_or(0, |&c| c + 1);
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut labels = vec![None; truth.len()];
    for class in 0..classes {
        let mut members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == class).collect();
        let m = members.len();
        if m < delta {
            return Err(Error::Validation(format!(
                "class {class} has {m} members, fewer than delta = {delta}"
            )));
        }
        for i in 0..delta {
            let j = i + (rng.next_u64() % (m - i) as u64) as usize;
            members.swap(i, j);
        }
        for &p in &members[..delta] {
            labels[p] = Some(class);
        }
    }
    one_hot(&labels, classes.max(1))
}

/// Fraction of `evaluate_on` where the prediction equals the truth;
/// undecided predictions never match.
pub fn accuracy(
    predicted: &[Option<usize>],
    truth: &[usize],
    evaluate_on: &[usize],
) -> Result<f64> {
    if evaluate_on.is_empty() {
        return Err(Error::Validation(
            "accuracy needs a nonempty evaluation set".into(),
        ));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} ground-truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    let mut hits = 0usize;
    for &i in evaluate_on {
        if i >= truth.len() {
            return Err(Error::Validation(format!(
                "evaluation index {i} out of range"
            )));
        }
        if predicted[i] == Some(truth[i]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / evaluate_on.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub features: PathBuf,
    pub truth: PathBuf,
    pub delta: usize,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub knn: KnnParams,
    pub solver: AdpConfig,
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 || self.trials == 0 {
            return Err(Error::InvalidParameter(
                "delta and trials must be at least 1".into(),
            ));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub labeled: Vec<usize>,
    pub residual_trace: Vec<f64>,
}

/// Everything in a report that must reproduce exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub n: usize,
    pub classes: usize,
    pub trials: Vec<TrialRecord>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub graph_secs: f64,
    pub trial_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub plan: TrialPlan,
    pub body: ReportBody,
    pub timing: Timing,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a report and checks its summary statistics against the trials.
    pub fn from_json(text: &str) -> Result<Report> {
        let report: Report = serde_json::from_str(text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported report format version {}",
                report.format_version
            )));
        }
        let accs: Vec<f64> = report.body.trials.iter().map(|t| t.accuracy).collect();
        if accs.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Validation("trial accuracy outside [0, 1]".into()));
        }
        let (mean, std) = mean_std(&accs);
        if (mean - report.body.mean_accuracy).abs() > 1e-12
            || (std - report.body.std_accuracy).abs() > 1e-12
        {
            return Err(Error::Validation(
                "report mean/std do not match its trials".into(),
            ));
        }
        Ok(report)
    }

    /// `trial,iteration,residual` rows for plotting convergence curves.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "iteration", "residual"])?;
        for t in &self.body.trials {
            for (i, r) in t.residual_trace.iter().enumerate() {
                w.write_record([t.trial.to_string(), (i + 1).to_string(), format!("{r:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads the plan's files and runs every trial.
pub fn run_trials(plan: &TrialPlan) -> Result<Report> {
    let data = io::read_features(&plan.features)?;
    let truth = io::read_truth(&plan.truth)?;
    run_trials_on(&data, &truth, plan)
}

/// Trial `i` uses seed `plan.seed + i`. The graph is built once.
pub fn run_trials_on(data: &Dataset, truth: &[usize], plan: &TrialPlan) -> Result<Report> {
    plan.validate()?;
    if truth.len() != data.len() {
        return Err(Error::Validation(format!(
            "{} truth labels for {} points",
            truth.len(),
            data.len()
        )));
    }
    let started = Instant::now();
    let graph = build_knn_gaussian(data, &plan.knn)?;
    let graph_secs = started.elapsed().as_secs_f64();

    let mut records = Vec::with_capacity(plan.trials);
    let mut trial_secs = Vec::with_capacity(plan.trials);
    for trial in 0..plan.trials {
        let seed = plan.seed.wrapping_add(trial as u64);
        let started = Instant::now();
        let record = run_one_trial(&graph, truth, plan, trial, seed).map_err(|e| Error::Trial {
            trial,
            seed,
            source: Box::new(e),
        })?;
        trial_secs.push(started.elapsed().as_secs_f64());
        records.push(record);
    }

    let accs: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    let (mean, std) = mean_std(&accs);
    Ok(Report {
        format_version: REPORT_FORMAT_VERSION,
        plan: plan.clone(),
        body: ReportBody {
            n: data.len(),
            classes: truth.iter().max().map_or(0, |&c| c + 1),
            trials: records,
            mean_accuracy: mean,
            std_accuracy: std,
        },
        timing: Timing {
            graph_secs,
            trial_secs,
        },
    })
}

fn run_one_trial(
    graph: &WeightGraph,
    truth: &[usize],
    plan: &TrialPlan,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let y = sample_labels(truth, plan.delta, seed)?;
    let unlabeled = y.unlabeled();
    let out = run_method(plan.method, graph, &y, &plan.solver)?;
    Ok(TrialRecord {
        trial,
        seed,
        accuracy: accuracy(&out.predictions, truth, &unlabeled)?,
        iterations: out.iterations,
        converged: out.converged,
        labeled: y.labeled().to_vec(),
        residual_trace: out.residual_trace,
    })
}

/// One case of the iterative-versus-closed-form affinity check.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub n: usize,
    pub alpha: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub passed: bool,
}

/// Runs the affinity diffusion to `1e-10` and the Kronecker closed form on
/// `cases` random kNN graphs with `3 ≤ n ≤ max_n` and random label
/// similarities, cycling `α` through 0.5, 0.9, 0.99.
pub fn oracle_check(max_n: usize, cases: usize, tol: f64, seed: u64) -> Result<Vec<OracleCase>> {
    if max_n < 3 {
        return Err(Error::InvalidParameter("oracle check needs n >= 3".into()));
    }
    const ALPHAS: [f64; 3] = [0.5, 0.9, 0.99];
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let n = 3 + (unit() * (max_n - 2) as f64) as usize;
        let n = n.min(max_n);
        let alpha = ALPHAS[case % ALPHAS.len()];
        let points: Vec<f64> = (0..n * 2).map(|_| unit()).collect();
        let data = Dataset::new(Matrix::from_vec(n, 2, points)?)?;
        let knn = KnnParams {
            k: 2.min(n - 1),
            k_sigma: 3.min(n - 1),
            ..KnnParams::default()
        };
        let s = build_knn_gaussian(&data, &knn)?.normalize();
        let scores: Vec<f64> = (0..n * 3).map(|_| unit()).collect();
        let z = label_similarity_from_scores(&Matrix::from_vec(n, 3, scores)?)?;

        let params = DiffusionParams {
            alpha,
            tol: 1e-10,
            max_iter: 100_000,
        };
        let iterative = diffuse_to_convergence(&s, &z, &params, None)?;
        let closed = closed_form_affinity(&s, &z, alpha)?;
        let gap = frobenius_distance(&iterative.a, &closed.a)? / closed.a.frobenius_norm();
        out.push(OracleCase {
            n,
            alpha,
            relative_gap: gap,
            iterations: iterative.iterations,
            passed: iterative.converged && gap <= tol,
        });
    }
    Ok(out)
}
