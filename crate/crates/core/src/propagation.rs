// SPDX-License-Identifier: Apache-2.0

//! Label encoding and propagation on a fixed graph.
//!
//! [`lgc_iterate`] is the propagation step used inside the alternating
//! solver; [`lgc_closed_form`] and [`gfhf`] are reference solvers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NormalizedGraph, WeightGraph};
use crate::numerics::{frobenius_distance, solve_dense, Matrix};

pub const DEFAULT_INNER_TOL: f64 = 1e-6;
pub const DEFAULT_LGC_MAX_ITER: usize = 1000;

/// One-hot label matrix. Unlabeled points have all-zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    y: Matrix,
    labeled: Vec<usize>,
    classes: usize,
}

impl LabelMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.y
    }

    /// Indices of labeled points, ascending.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> Vec<usize> {
        let mut mask = vec![false; self.y.rows()];
        for &i in &self.labeled {
            mask[i] = true;
        }
        (0..self.y.rows()).filter(|&i| !mask[i]).collect()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.y.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.rows() == 0
    }

    /// Per-point labels, `None` for unlabeled points.
    pub fn labels(&self) -> Vec<Option<usize>> {
        (0..self.y.rows())
            .map(|i| self.y.row(i).iter().position(|&v| v == 1.0))
            .collect()
    }
}

/// Encodes per-point labels (`None` = unlabeled) as an `n × classes` one-hot matrix.
pub fn one_hot(labels: &[Option<usize>], classes: usize) -> Result<LabelMatrix> {
    if classes == 0 {
        return Err(Error::InvalidParameter(
            "class count must be at least 1".into(),
        ));
    }
    let mut y = Matrix::zeros(labels.len(), classes);
    let mut labeled = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        if let Some(c) = *label {
            if c >= classes {
                return Err(Error::Validation(format!(
                    "label {c} at point {i} is outside [0, {classes})"
                )));
            }
            y[(i, c)] = 1.0;
            labeled.push(i);
        }
    }
    Ok(LabelMatrix {
        y,
        labeled,
        classes,
    })
}

/// Score matrix `F` plus the history of the solver that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub f: Matrix,
    pub converged: bool,
    pub iterations: usize,
    /// Frobenius distance between successive iterates.
    pub residual_trace: Vec<f64>,
    /// Points left undetermined because no labeled point is reachable (GFHF only).
    #[serde(default)]
    pub disconnected: Vec<usize>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_conforming(s: &Matrix, y: &LabelMatrix) -> Result<()> {
    if !s.is_square() || s.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            op: "propagation",
            left: s.shape(),
            right: y.matrix().shape(),
        });
    }
    Ok(())
}

/// One step `α·S·F + (1 − α)·Y`.
pub fn lgc_step(s: &Matrix, f: &Matrix, y: &Matrix, alpha: f64) -> Result<Matrix> {
    s.matmul(f)?.scale(alpha)?.add_scaled(1.0 - alpha, y)
}

/// Iterates `F ← α·S·F + (1 − α)·Y` from `F = Y` until successive iterates are
/// within `tol` (Frobenius) or `max_iter` steps have run.
pub fn lgc_iterate(
    s: &NormalizedGraph,
    y: &LabelMatrix,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Classification> {
    check_alpha(alpha)?;
    check_conforming(s.matrix(), y)?;
    let mut f = y.matrix().clone();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = lgc_step(s.matrix(), &f, y.matrix(), alpha)?;
        let r = frobenius_distance(&next, &f)?;
        trace.push(r);
        f = next;
        if r <= tol {
            converged = true;
            break;
        }
    }
    Ok(Classification {
        f,
        converged,
        iterations: trace.len(),
        residual_trace: trace,
        disconnected: Vec::new(),
    })
}

/// `F* = (I − α·S)⁻¹·Y` by a dense solve.
///
/// The iteration in [`lgc_iterate`] converges to `(1 − α)` times this; the
/// two agree on every row argmax.
pub fn lgc_closed_form(s: &NormalizedGraph, y: &LabelMatrix, alpha: f64) -> Result<Classification> {
    check_alpha(alpha)?;
    check_conforming(s.matrix(), y)?;
    let n = s.len();
    let system = Matrix::identity(n).add_scaled(-alpha, s.matrix())?;
    let f = solve_dense(&system, y.matrix())?;
    Ok(Classification {
        f,
        converged: true,
        iterations: 0,
        residual_trace: Vec::new(),
        disconnected: Vec::new(),
    })
}

/// Harmonic solution with labeled rows clamped to `Y`.
///
/// Unlabeled points with no path to a labeled point keep an all-zero row and
/// are listed in `disconnected`.
pub fn gfhf(w: &WeightGraph, y: &LabelMatrix) -> Result<Classification> {
    let w = w.weights();
    check_conforming(w, y)?;
    let n = w.rows();

    // BFS from the labeled set over positive edges.
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = y.labeled().iter().copied().collect();
    for &i in y.labeled() {
        reached[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for (j, &wij) in w.row(i).iter().enumerate() {
            if wij > 0.0 && !reached[j] {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }

    let is_labeled = {
        let mut m = vec![false; n];
        for &i in y.labeled() {
            m[i] = true;
        }
        m
    };
    let free: Vec<usize> = (0..n).filter(|&i| !is_labeled[i] && reached[i]).collect();
    let disconnected: Vec<usize> = (0..n).filter(|&i| !is_labeled[i] && !reached[i]).collect();

    let mut f = Matrix::zeros(n, y.classes());
    for &i in y.labeled() {
        f.row_mut(i).copy_from_slice(y.matrix().row(i));
    }

    if !free.is_empty() {
        let degrees = w.row_sums();
        let m = free.len();
        let mut laplacian = Matrix::zeros(m, m);
        let mut rhs = Matrix::zeros(m, y.classes());
        for (a, &i) in free.iter().enumerate() {
            laplacian[(a, a)] = degrees[i];
            for (b, &j) in free.iter().enumerate() {
                laplacian[(a, b)] -= w[(i, j)];
            }
            for &l in y.labeled() {
                let wil = w[(i, l)];
                if wil != 0.0 {
                    for (r, &yv) in rhs.row_mut(a).iter_mut().zip(y.matrix().row(l)) {
                        *r += wil * yv;
                    }
                }
            }
        }
        let fu = solve_dense(&laplacian, &rhs)?;
        for (a, &i) in free.iter().enumerate() {
            f.row_mut(i).copy_from_slice(fu.row(a));
        }
    }

    Ok(Classification {
        f,
        converged: true,
        iterations: 0,
        residual_trace: Vec::new(),
        disconnected,
    })
}

/// Row-wise argmax, ties to the smallest class. All-zero rows are
/// undecided (`None`).
pub fn predict(f: &Matrix) -> Vec<Option<usize>> {
    (0..f.rows())
        .map(|i| {
            let row = f.row(i);
            if row.iter().all(|&v| v == 0.0) {
                return None;
            }
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            Some(best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetric_normalize;

    fn swap_graph() -> NormalizedGraph {
        symmetric_normalize(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap())
    }

    fn labels(raw: &[i64]) -> Vec<Option<usize>> {
        raw.iter()
            .map(|&v| if v < 0 { None } else { Some(v as usize) })
            .collect()
    }

    #[test]
    fn one_hot_encoding() {
        let y = one_hot(&labels(&[0, 1, -1]), 2).unwrap();
        assert_eq!(
            y.matrix(),
            &Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap()
        );
        assert_eq!(y.labeled(), &[0, 1]);
        assert_eq!(y.unlabeled(), vec![2]);

        let ones = one_hot(&labels(&[0, 0, 0]), 1).unwrap();
        assert_eq!(
            ones.matrix(),
            &Matrix::from_rows(&[[1.0], [1.0], [1.0]]).unwrap()
        );

        let raw = labels(&[2, 0, 1, 1]);
        let y = one_hot(&raw, 3).unwrap();
        assert_eq!(predict(y.matrix()), raw);
        assert_eq!(y.labels(), raw);
    }

    #[test]
    fn one_hot_rejects_out_of_range() {
        assert!(matches!(
            one_hot(&labels(&[0, 3]), 3),
            Err(Error::Validation(_))
        ));
        assert!(one_hot(&labels(&[0]), 0).is_err());
    }

    #[test]
    fn lgc_on_empty_graph_is_decoupled() {
        let s = symmetric_normalize(&Matrix::zeros(3, 3));
        let y = one_hot(&labels(&[0, -1, 1]), 2).unwrap();
        let out = lgc_iterate(&s, &y, 0.9, 1e-9, 100).unwrap();
        assert!(out.converged);
        let expected = y.matrix().scale(1.0 - 0.9).unwrap();
        assert_eq!(out.f, expected);
        // The first step already lands on the fixed point.
        assert_eq!(out.residual_trace.last().copied(), Some(0.0));
    }

    #[test]
    fn lgc_two_node_fixed_point() {
        // F = 0.5·S·F + 0.5·Y with S the swap: f0 = 0.5 f1 + 0.5, f1 = 0.5 f0.
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        let out = lgc_iterate(&swap_graph(), &y, 0.5, 1e-14, 500).unwrap();
        assert!(out.converged);
        assert!((out.f[(0, 0)] - 2.0 / 3.0).abs() < 1e-13);
        assert!((out.f[(1, 0)] - 1.0 / 3.0).abs() < 1e-13);
        assert_eq!(out.f[(0, 1)], 0.0);
    }

    #[test]
    fn lgc_closed_form_two_node() {
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        let out = lgc_closed_form(&swap_graph(), &y, 0.5).unwrap();
        assert!((out.f[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((out.f[(1, 0)] - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn lgc_closed_form_small_alpha_tends_to_labels() {
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        let out = lgc_closed_form(&swap_graph(), &y, 1e-9).unwrap();
        assert!(frobenius_distance(&out.f, y.matrix()).unwrap() < 1e-8);
    }

    #[test]
    fn lgc_rejects_bad_alpha() {
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        for alpha in [0.0, 1.0, 1.5, f64::NAN] {
            assert!(lgc_iterate(&swap_graph(), &y, alpha, 1e-6, 10).is_err());
            assert!(lgc_closed_form(&swap_graph(), &y, alpha).is_err());
        }
    }

    #[test]
    fn lgc_reports_non_convergence() {
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        let out = lgc_iterate(&swap_graph(), &y, 0.99, 1e-12, 5).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
        assert_eq!(out.residual_trace.len(), 5);
    }

    #[test]
    fn gfhf_single_neighbor_inherits() {
        let w = WeightGraph::from_matrix(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap())
            .unwrap();
        let y = one_hot(&labels(&[0, -1]), 2).unwrap();
        let out = gfhf(&w, &y).unwrap();
        assert_eq!(out.f, Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap());
    }

    #[test]
    fn gfhf_chain_midpoint() {
        let w = WeightGraph::from_matrix(
            Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let y = one_hot(&labels(&[0, -1, 1]), 2).unwrap();
        let out = gfhf(&w, &y).unwrap();
        assert_eq!(out.f.row(1), &[0.5, 0.5]);
        assert_eq!(out.f.row(0), y.matrix().row(0));
        assert_eq!(out.f.row(2), y.matrix().row(2));
    }

    #[test]
    fn gfhf_flags_disconnected_points() {
        let w = WeightGraph::from_matrix(
            Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let y = one_hot(&labels(&[1, -1, -1]), 2).unwrap();
        let out = gfhf(&w, &y).unwrap();
        assert_eq!(out.disconnected, vec![2]);
        assert_eq!(out.f.row(2), &[0.0, 0.0]);
        assert_eq!(out.f.row(1), &[0.0, 1.0]);
        assert_eq!(predict(&out.f)[2], None);
    }

    #[test]
    fn predict_tie_and_zero_rows() {
        let f = Matrix::from_rows(&[[0.7, 0.3], [0.5, 0.5], [0.0, 0.0], [0.1, 0.9]]).unwrap();
        assert_eq!(predict(&f), vec![Some(0), Some(0), None, Some(1)]);
    }
}
