// SPDX-License-Identifier: Apache-2.0

//! Alternating diffusion: propagate labels on the current affinity, feed the
//! resulting label similarity back into the affinity diffusion, repeat.
//!
//! [`Variant::Alternating`] runs both inner diffusions to convergence each
//! outer round. [`Variant::Joint`] interleaves single steps of each.

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffusion::{
    diffuse_to_convergence, diffusion_step, label_similarity_from_scores, Affinity,
    DiffusionParams, DEFAULT_DIFFUSION_MAX_ITER,
};
use crate::error::{Error, Result};
use crate::graph::{symmetric_normalize, NormalizedGraph, WeightGraph};
use crate::numerics::{frobenius_distance, Matrix};
use crate::propagation::{
    lgc_iterate, lgc_step, Classification, LabelMatrix, DEFAULT_INNER_TOL, DEFAULT_LGC_MAX_ITER,
};

pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_BETA: f64 = 1e-2;
pub const DEFAULT_MAX_OUTER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Both inner diffusions run to convergence every outer round.
    #[serde(rename = "adp")]
    Alternating,
    /// One step of each diffusion per round.
    #[serde(rename = "adp1")]
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdpConfig {
    pub alpha: f64,
    /// Outer stopping threshold on `‖F⁽ᵗ⁺¹⁾ − F⁽ᵗ⁾‖_F`.
    pub beta: f64,
    /// Stopping threshold shared by both inner diffusions.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner_lgc: usize,
    pub max_inner_diffusion: usize,
    pub variant: Variant,
}

impl Default for AdpConfig {
    fn default() -> Self {
        AdpConfig {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            inner_tol: DEFAULT_INNER_TOL,
            max_outer: DEFAULT_MAX_OUTER,
            max_inner_lgc: DEFAULT_LGC_MAX_ITER,
            max_inner_diffusion: DEFAULT_DIFFUSION_MAX_ITER,
            variant: Variant::Alternating,
        }
    }
}

impl AdpConfig {
    pub fn joint() -> Self {
        AdpConfig {
            variant: Variant::Joint,
            ..AdpConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.inner_tol.is_nan() || self.inner_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "inner tolerance must be positive, got {}",
                self.inner_tol
            )));
        }
        if self.max_outer == 0 || self.max_inner_lgc == 0 || self.max_inner_diffusion == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn diffusion_params(&self) -> DiffusionParams {
        DiffusionParams {
            alpha: self.alpha,
            tol: self.inner_tol,
            max_iter: self.max_inner_diffusion,
        }
    }
}

/// Diagnostics for one outer round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub residual: f64,
    pub lgc_iterations: usize,
    pub lgc_converged: bool,
    pub diffusion_iterations: usize,
    pub diffusion_converged: bool,
    /// Wall time of the round; excluded from any comparison of results.
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdpResult {
    pub f: Classification,
    pub a: Affinity,
    pub outer_iterations: usize,
    pub outer_residuals: Vec<f64>,
    pub converged: bool,
    pub rounds: Vec<OuterRecord>,
}

fn validate_inputs(w: &WeightGraph, y: &LabelMatrix, cfg: &AdpConfig) -> Result<()> {
    cfg.validate()?;
    if w.len() != y.len() {
        return Err(Error::DimensionMismatch {
            op: "adp",
            left: w.weights().shape(),
            right: y.matrix().shape(),
        });
    }
    Ok(())
}

/// Runs the configured variant.
pub fn solve(w: &WeightGraph, y: &LabelMatrix, cfg: &AdpConfig) -> Result<AdpResult> {
    match cfg.variant {
        Variant::Alternating => adp(w, y, cfg),
        Variant::Joint => adp1(w, y, cfg),
    }
}

/// Alternating variant.
///
/// The first round propagates on `S` itself (the initial affinity is already
/// normalized); later rounds propagate on the normalization of the current
/// affinity. Each affinity diffusion warm-starts from the previous affinity.
/// At least one round always runs.
pub fn adp(w: &WeightGraph, y: &LabelMatrix, cfg: &AdpConfig) -> Result<AdpResult> {
    validate_inputs(w, y, cfg)?;
    let s = w.normalize();
    let params = cfg.diffusion_params();

    let mut f_prev = y.matrix().clone();
    let mut a = Affinity {
        a: s.matrix().clone(),
        iterations: 0,
        converged: true,
        residual_trace: Vec::new(),
    };
    let mut propagation_graph = s.clone();
    let mut residuals = Vec::new();
    let mut rounds = Vec::new();
    let mut converged = false;
    let mut f_last = None;

    for _ in 0..cfg.max_outer {
        let started = Instant::now();
        let f = lgc_iterate(
            &propagation_graph,
            y,
            cfg.alpha,
            cfg.inner_tol,
            cfg.max_inner_lgc,
        )?;
        let residual = frobenius_distance(&f.f, &f_prev)?;
        let z = label_similarity_from_scores(&f.f)?;
        a = diffuse_to_convergence(&s, &z, &params, Some(&a.a))?;
        propagation_graph = symmetric_normalize(&a.a);

        residuals.push(residual);
        rounds.push(OuterRecord {
            residual,
            lgc_iterations: f.iterations,
            lgc_converged: f.converged,
            diffusion_iterations: a.iterations,
            diffusion_converged: a.converged,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        f_prev = f.f.clone();
        f_last = Some(f);
        if residual <= cfg.beta {
            converged = true;
            break;
        }
    }

    Ok(AdpResult {
        f: f_last.expect("at least one outer round"),
        a,
        outer_iterations: residuals.len(),
        outer_residuals: residuals,
        converged,
        rounds,
    })
}

/// Joint variant: per round one propagation step on the normalization of the
/// current affinity (`S` itself in the first round), then one affinity
/// diffusion step with the fresh label similarity.
pub fn adp1(w: &WeightGraph, y: &LabelMatrix, cfg: &AdpConfig) -> Result<AdpResult> {
    validate_inputs(w, y, cfg)?;
    let s = w.normalize();
    let ym = y.matrix();

    let mut f = ym.clone();
    let mut a = s.matrix().clone();
    let mut propagation: NormalizedGraph = s.clone();
    let mut residuals = Vec::new();
    let mut rounds = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_outer {
        let started = Instant::now();
        let next_f = lgc_step(propagation.matrix(), &f, ym, cfg.alpha)?;
        let residual = frobenius_distance(&next_f, &f)?;
        let z = label_similarity_from_scores(&next_f)?;
        a = diffusion_step(&s, &a, &z, cfg.alpha)?;
        propagation = symmetric_normalize(&a);
        f = next_f;

        residuals.push(residual);
        rounds.push(OuterRecord {
            residual,
            lgc_iterations: 1,
            lgc_converged: false,
            diffusion_iterations: 1,
            diffusion_converged: false,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if residual <= cfg.beta {
            converged = true;
            break;
        }
    }

    let outer = residuals.len();
    Ok(AdpResult {
        f: Classification {
            f,
            converged,
            iterations: outer,
            residual_trace: residuals.clone(),
            disconnected: Vec::new(),
        },
        a: Affinity {
            a,
            iterations: outer,
            converged,
            residual_trace: Vec::new(),
        },
        outer_iterations: outer,
        outer_residuals: residuals,
        converged,
        rounds,
    })
}

/// Plain propagation on the initial graph (the `β → ∞` reduction of [`adp`]).
pub fn lgc_baseline(w: &WeightGraph, y: &LabelMatrix, cfg: &AdpConfig) -> Result<Classification> {
    cfg.validate()?;
    lgc_iterate(
        &w.normalize(),
        y,
        cfg.alpha,
        cfg.inner_tol,
        cfg.max_inner_lgc,
    )
}

/// Matrix convenience for callers holding raw weights.
pub fn adp_from_weights(w: &Matrix, y: &LabelMatrix, cfg: &AdpConfig) -> Result<AdpResult> {
    solve(&WeightGraph::from_matrix(w.clone())?, y, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{one_hot, predict};

    /// Two disjoint 2-cliques {0,1} and {2,3}.
    fn cliques() -> WeightGraph {
        WeightGraph::from_matrix(
            Matrix::from_rows(&[
                [0.0, 1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn triangle() -> WeightGraph {
        WeightGraph::from_matrix(
            Matrix::from_rows(&[[0.0, 1.0, 0.2], [1.0, 0.0, 0.5], [0.2, 0.5, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn huge_beta_reduces_to_plain_lgc() {
        let w = triangle();
        let y = one_hot(&[Some(0), None, Some(1)], 2).unwrap();
        let cfg = AdpConfig {
            beta: 1e300,
            ..AdpConfig::default()
        };
        let out = adp(&w, &y, &cfg).unwrap();
        assert_eq!(out.outer_iterations, 1);
        assert!(out.converged);
        let plain = lgc_baseline(&w, &y, &cfg).unwrap();
        assert_eq!(out.f.f, plain.f);
    }

    #[test]
    fn joint_single_step_is_one_propagation_step() {
        let w = triangle();
        let y = one_hot(&[Some(0), None, Some(1)], 2).unwrap();
        let alpha = 0.9;
        let cfg = AdpConfig {
            alpha,
            beta: 1e300,
            ..AdpConfig::joint()
        };
        let out = adp1(&w, &y, &cfg).unwrap();
        assert_eq!(out.outer_iterations, 1);
        // Hand evaluation of α·S·Y + (1 − α)·Y.
        let d: [f64; 3] = [1.2, 1.5, 0.7];
        let wm = w.weights();
        for i in 0..3 {
            for c in 0..2 {
                let mut sy = 0.0;
                for j in 0..3 {
                    sy += wm[(i, j)] / (d[i] * d[j]).sqrt() * y.matrix()[(j, c)];
                }
                let expected = alpha * sy + (1.0 - alpha) * y.matrix()[(i, c)];
                assert!((out.f.f[(i, c)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disjoint_cliques_keep_their_labels() {
        let y = one_hot(&[Some(0), None, None, Some(1)], 2).unwrap();
        for cfg in [AdpConfig::default(), AdpConfig::joint()] {
            let out = solve(&cliques(), &y, &cfg).unwrap();
            assert_eq!(predict(&out.f.f), vec![Some(0), Some(0), Some(1), Some(1)]);
            for i in 0..2 {
                for j in 2..4 {
                    assert_eq!(out.a.a[(i, j)], 0.0);
                    assert_eq!(out.a.a[(j, i)], 0.0);
                }
            }
            assert_eq!(out.f.f[(0, 1)], 0.0);
            assert_eq!(out.f.f[(3, 0)], 0.0);
        }
    }

    #[test]
    fn residual_history_matches_iteration_count() {
        let y = one_hot(&[Some(0), None, Some(1)], 2).unwrap();
        for cfg in [AdpConfig::default(), AdpConfig::joint()] {
            let out = solve(&triangle(), &y, &cfg).unwrap();
            assert_eq!(out.outer_residuals.len(), out.outer_iterations);
            assert_eq!(out.rounds.len(), out.outer_iterations);
            if out.converged {
                assert!(*out.outer_residuals.last().unwrap() <= cfg.beta);
            }
        }
    }

    #[test]
    fn unlabeled_input_degenerates_to_zero_scores() {
        let y = one_hot(&[None, None, None], 2).unwrap();
        let out = adp(&triangle(), &y, &AdpConfig::default()).unwrap();
        assert_eq!(out.f.f, Matrix::zeros(3, 2));
        assert_eq!(out.outer_iterations, 1);
        assert!(predict(&out.f.f).iter().all(Option::is_none));
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let y = one_hot(&[Some(0), None], 2).unwrap();
        assert!(adp(&triangle(), &y, &AdpConfig::default()).is_err());
        let y = one_hot(&[Some(0), None, None], 2).unwrap();
        for cfg in [
            AdpConfig {
                alpha: 1.0,
                ..AdpConfig::default()
            },
            AdpConfig {
                beta: 0.0,
                ..AdpConfig::default()
            },
            AdpConfig {
                max_outer: 0,
                ..AdpConfig::default()
            },
        ] {
            assert!(matches!(
                adp(&triangle(), &y, &cfg),
                Err(Error::InvalidParameter(_))
            ));
        }
    }
}
