// SPDX-License-Identifier: Apache-2.0

//! Label-regularized tensor-graph diffusion for learning the affinity `A`.
//!
//! The iteration `A ← α·S·(A + Z)·Sᵀ + (1 − α)·I` is a contraction with
//! factor `α` on the lifted operator `α·(S ⊗ S)`, so it converges from any
//! start to the same fixed point. [`closed_form_affinity`] solves for that
//! fixed point directly on the `n² × n²` Kronecker system and is meant only
//! as a small-instance oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedGraph;
use crate::numerics::{frobenius_distance, kron_with_cap, solve_dense, vec, vec_inverse, Matrix};
use crate::propagation::Classification;

pub const DEFAULT_DIFFUSION_TOL: f64 = 1e-6;
pub const DEFAULT_DIFFUSION_MAX_ITER: usize = 2000;
/// Largest `n` accepted by [`closed_form_affinity`] by default.
pub const DEFAULT_ORACLE_MAX_N: usize = 32;

/// `Z = F̂·F̂ᵀ` with `F̂` the row-normalized classification.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSimilarity {
    z: Matrix,
}

impl LabelSimilarity {
    /// Wraps an explicit similarity matrix (square, symmetric, nonnegative).
    pub fn from_matrix(z: Matrix) -> Result<Self> {
        if !z.is_symmetric() || z.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Validation(
                "label similarity must be square, symmetric and nonnegative".into(),
            ));
        }
        Ok(LabelSimilarity { z })
    }

    pub fn zeros(n: usize) -> Self {
        LabelSimilarity {
            z: Matrix::zeros(n, n),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.z
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Affinity {
    pub a: Matrix,
    pub iterations: usize,
    pub converged: bool,
    pub residual_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl DiffusionParams {
    pub fn new(alpha: f64) -> Self {
        DiffusionParams {
            alpha,
            tol: DEFAULT_DIFFUSION_TOL,
            max_iter: DEFAULT_DIFFUSION_MAX_ITER,
        }
    }

    /// `α = 1/(μ + 1)` for the regularization weight `μ > 0`.
    pub fn from_mu(mu: f64) -> Self {
        DiffusionParams::new(1.0 / (mu + 1.0))
    }

    pub fn mu(&self) -> f64 {
        1.0 / self.alpha - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diffusion tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    // α ≥ 1 means μ ≤ 0, where the graph objective is unbounded below.
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Builds `Z` from a classification. Rows are rescaled to sum to one first;
/// all-zero rows stay zero.
pub fn label_similarity(f: &Classification) -> Result<LabelSimilarity> {
    label_similarity_from_scores(&f.f)
}

pub fn label_similarity_from_scores(f: &Matrix) -> Result<LabelSimilarity> {
    if f.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::Validation(
            "classification scores must be nonnegative".into(),
        ));
    }
    let mut normalized = f.clone();
    for r in 0..normalized.rows() {
        let row = normalized.row_mut(r);
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    let z = normalized.matmul(&normalized.transpose())?;
    Ok(LabelSimilarity { z })
}

fn check_square_pair(s: &Matrix, other: &Matrix, op: &'static str) -> Result<()> {
    if !s.is_square() || s.shape() != other.shape() {
        return Err(Error::DimensionMismatch {
            op,
            left: s.shape(),
            right: other.shape(),
        });
    }
    Ok(())
}

/// Scratch buffers for repeated diffusion steps.
#[derive(Default)]
struct StepBuffers {
    sum: Matrix,
    left: Matrix,
    left_t: Matrix,
    right: Matrix,
}

/// Writes `α·S·(A + Z)·Sᵀ + (1 − α)·I` into `out`.
fn step_into(
    s: &Matrix,
    a: &Matrix,
    z: &Matrix,
    alpha: f64,
    buf: &mut StepBuffers,
    out: &mut Matrix,
) -> Result<()> {
    check_square_pair(s, a, "diffusion_step")?;
    check_square_pair(s, z, "diffusion_step")?;
    buf.sum.clone_from(a);
    buf.sum.add_assign(z);
    s.matmul_into(&buf.sum, &mut buf.left)?;
    buf.left.transpose_into(&mut buf.left_t);
    s.matmul_into(&buf.left_t, &mut buf.right)?;
    buf.right.transpose_into(out);
    out.scale_assign(alpha);
    let jump = 1.0 - alpha;
    for i in 0..out.rows() {
        out[(i, i)] += jump;
    }
    out.check_finite()
}

/// One update `α·S·(A + Z)·Sᵀ + (1 − α)·I`.
pub fn diffusion_step(
    s: &NormalizedGraph,
    a: &Matrix,
    z: &LabelSimilarity,
    alpha: f64,
) -> Result<Matrix> {
    let mut out = Matrix::default();
    step_into(
        s.matrix(),
        a,
        z.matrix(),
        alpha,
        &mut StepBuffers::default(),
        &mut out,
    )?;
    Ok(out)
}

/// Repeats [`diffusion_step`] from `a0` (default `S`) until successive
/// iterates are within `params.tol` or `params.max_iter` steps have run.
pub fn diffuse_to_convergence(
    s: &NormalizedGraph,
    z: &LabelSimilarity,
    params: &DiffusionParams,
    a0: Option<&Matrix>,
) -> Result<Affinity> {
    params.validate()?;
    let mut a = a0.unwrap_or(s.matrix()).clone();
    let mut next = Matrix::default();
    let mut buf = StepBuffers::default();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..params.max_iter {
        step_into(
            s.matrix(),
            &a,
            z.matrix(),
            params.alpha,
            &mut buf,
            &mut next,
        )?;
        let r = frobenius_distance(&next, &a)?;
        trace.push(r);
        std::mem::swap(&mut a, &mut next);
        if r <= params.tol {
            converged = true;
            break;
        }
    }
    Ok(Affinity {
        a,
        iterations: trace.len(),
        converged,
        residual_trace: trace,
    })
}

/// Fixed point of the diffusion via the lifted Kronecker system (default size cap).
pub fn closed_form_affinity(
    s: &NormalizedGraph,
    z: &LabelSimilarity,
    alpha: f64,
) -> Result<Affinity> {
    closed_form_affinity_with_cap(s, z, alpha, DEFAULT_ORACLE_MAX_N)
}

/// `A* = vec⁻¹(((𝕀 − α𝕊)⁻¹ − 𝕀)·vec(Z) + (1 − α)·(𝕀 − α𝕊)⁻¹·vec(I))`, `𝕊 = S ⊗ S`.
pub fn closed_form_affinity_with_cap(
    s: &NormalizedGraph,
    z: &LabelSimilarity,
    alpha: f64,
    max_n: usize,
) -> Result<Affinity> {
    check_alpha(alpha)?;
    let s = s.matrix();
    check_square_pair(s, z.matrix(), "closed_form_affinity")?;
    let n = s.rows();
    if n > max_n {
        return Err(Error::OracleCapacity {
            requested: n,
            cap: max_n,
        });
    }
    let lifted = kron_with_cap(s, s, max_n * max_n)?;
    let system = Matrix::identity(n * n).add_scaled(-alpha, &lifted)?;

    let vz = vec(z.matrix());
    let vi = vec(&Matrix::identity(n));
    let mut rhs = Matrix::zeros(n * n, 2);
    for r in 0..n * n {
        rhs[(r, 0)] = vz[(r, 0)];
        rhs[(r, 1)] = vi[(r, 0)];
    }
    let sol = solve_dense(&system, &rhs).map_err(|e| match e {
        // Cannot happen for α < 1 and ρ(S) ≤ 1; surface it as an internal failure.
        Error::Singular { .. } => {
            Error::Validation(format!("lifted diffusion system is singular: {e}"))
        }
        other => other,
    })?;

    let mut out = Matrix::zeros(n * n, 1);
    for r in 0..n * n {
        out[(r, 0)] = sol[(r, 0)] - vz[(r, 0)] + (1.0 - alpha) * sol[(r, 1)];
    }
    Ok(Affinity {
        a: vec_inverse(&out, n, n)?,
        iterations: 0,
        converged: true,
        residual_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetric_normalize;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[[v]]).unwrap()
    }

    fn classification(f: Matrix) -> Classification {
        Classification {
            f,
            converged: true,
            iterations: 0,
            residual_trace: Vec::new(),
            disconnected: Vec::new(),
        }
    }

    fn identity_graph_1() -> NormalizedGraph {
        crate::graph::symmetric_normalize(&scalar(1.0))
    }

    #[test]
    fn similarity_of_one_hot_rows() {
        let f = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let z = label_similarity(&classification(f)).unwrap();
        let expected =
            Matrix::from_rows(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(z.matrix(), &expected);
    }

    #[test]
    fn similarity_of_zero_scores_is_zero() {
        let z = label_similarity(&classification(Matrix::zeros(3, 2))).unwrap();
        assert_eq!(z.matrix(), &Matrix::zeros(3, 3));
    }

    #[test]
    fn similarity_diagonal_is_squared_row_norm() {
        let f = Matrix::from_rows(&[
            [0.2, 0.6, 0.2],
            [3.0, 1.0, 0.0],
            [0.0, 0.0, 0.0],
            [0.1, 0.1, 0.1],
        ])
        .unwrap();
        let z = label_similarity(&classification(f.clone())).unwrap();
        for i in 0..4 {
            let sum: f64 = f.row(i).iter().sum();
            let expected = if sum > 0.0 {
                f.row(i).iter().map(|v| (v / sum).powi(2)).sum::<f64>()
            } else {
                0.0
            };
            assert!((z.matrix()[(i, i)] - expected).abs() < 1e-15);
            assert!(z.matrix()[(i, i)] <= 1.0);
        }
        assert!(z.matrix().is_symmetric());
    }

    #[test]
    fn similarity_rejects_negative_scores() {
        let f = Matrix::from_rows(&[[-0.1, 1.0]]).unwrap();
        assert!(label_similarity(&classification(f)).is_err());
    }

    #[test]
    fn step_on_empty_graph_is_jump_term() {
        let s = symmetric_normalize(&Matrix::zeros(3, 3));
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 1.0, 0.0], [3.0, 0.0, 5.0]]).unwrap();
        let z = LabelSimilarity::from_matrix(Matrix::identity(3)).unwrap();
        let out = diffusion_step(&s, &a, &z, 0.7).unwrap();
        assert_eq!(out, Matrix::identity(3).scale(1.0 - 0.7).unwrap());
    }

    #[test]
    fn scalar_step_and_fixed_point() {
        let z = LabelSimilarity::from_matrix(scalar(1.0)).unwrap();
        let s = identity_graph_1();
        assert_eq!(
            diffusion_step(&s, &scalar(1.0), &z, 0.5).unwrap(),
            scalar(1.5)
        );
        let params = DiffusionParams {
            alpha: 0.5,
            tol: 1e-13,
            max_iter: 500,
        };
        let out = diffuse_to_convergence(&s, &z, &params, None).unwrap();
        assert!(out.converged);
        assert!((out.a[(0, 0)] - 2.0).abs() < 1e-12);
        let closed = closed_form_affinity(&s, &z, 0.5).unwrap();
        assert!((closed.a[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_similarity_reduces_to_tensor_graph_diffusion() {
        let w = Matrix::from_rows(&[[0.0, 1.0, 0.5], [1.0, 0.0, 2.0], [0.5, 2.0, 0.0]]).unwrap();
        let s = symmetric_normalize(&w);
        let a = Matrix::from_rows(&[[0.3, 0.1, 0.0], [0.1, 0.2, 0.4], [0.0, 0.4, 0.9]]).unwrap();
        let alpha = 0.8;
        let step = diffusion_step(&s, &a, &LabelSimilarity::zeros(3), alpha).unwrap();
        // α·S·A·Sᵀ + (1 − α)·I with plain products.
        let sm = s.matrix();
        let expected = sm
            .matmul(&a)
            .unwrap()
            .matmul(&sm.transpose())
            .unwrap()
            .scale(alpha)
            .unwrap()
            .add(&Matrix::identity(3).scale(1.0 - alpha).unwrap())
            .unwrap();
        assert!(frobenius_distance(&step, &expected).unwrap() < 1e-15);
    }

    #[test]
    fn empty_graph_converges_to_jump_term() {
        let s = symmetric_normalize(&Matrix::zeros(4, 4));
        let params = DiffusionParams::new(0.6);
        let out = diffuse_to_convergence(&s, &LabelSimilarity::zeros(4), &params, None).unwrap();
        assert!(out.converged);
        assert_eq!(out.a, Matrix::identity(4).scale(1.0 - 0.6).unwrap());
        assert_eq!(out.iterations, 2);
        let closed = closed_form_affinity(&s, &LabelSimilarity::zeros(4), 0.6).unwrap();
        assert!(frobenius_distance(&closed.a, &out.a).unwrap() < 1e-15);
    }

    #[test]
    fn params_reject_alpha_at_or_above_one() {
        for alpha in [0.0, 1.0, 2.0] {
            assert!(DiffusionParams::new(alpha).validate().is_err());
        }
        assert!(DiffusionParams {
            tol: 0.0,
            ..DiffusionParams::new(0.5)
        }
        .validate()
        .is_err());
        let p = DiffusionParams::from_mu(1.0);
        assert_eq!(p.alpha, 0.5);
        assert_eq!(p.mu(), 1.0);
    }

    #[test]
    fn oracle_refuses_large_graphs() {
        let s = symmetric_normalize(&Matrix::zeros(5, 5));
        let err =
            closed_form_affinity_with_cap(&s, &LabelSimilarity::zeros(5), 0.5, 4).unwrap_err();
        assert!(matches!(
            err,
            Error::OracleCapacity {
                requested: 5,
                cap: 4
            }
        ));
    }

    #[test]
    fn non_convergence_is_reported() {
        let z = LabelSimilarity::from_matrix(scalar(1.0)).unwrap();
        let params = DiffusionParams {
            alpha: 0.99,
            tol: 1e-12,
            max_iter: 3,
        };
        let out = diffuse_to_convergence(&identity_graph_1(), &z, &params, None).unwrap();
        assert!(!out.converged);
        assert_eq!(out.residual_trace.len(), 3);
    }
}
