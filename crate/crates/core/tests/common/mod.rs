// SPDX-License-Identifier: Apache-2.0

//! Random instances and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use adp_core::diffusion::{label_similarity_from_scores, LabelSimilarity};
use adp_core::graph::{build_knn_gaussian, Dataset, KnnParams, WeightGraph};
use adp_core::propagation::{one_hot, LabelMatrix};
use adp_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

pub fn random_points(rng: &mut SplitMix64, n: usize, d: usize) -> Dataset {
    let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::new(Matrix::from_vec(n, d, data).unwrap()).unwrap()
}

/// kNN Gaussian graph on `n` uniform random points in the plane.
pub fn random_graph(rng: &mut SplitMix64, n: usize) -> WeightGraph {
    let data = random_points(rng, n, 2);
    let params = KnnParams {
        k: 3.min(n - 1),
        k_sigma: 4.min(n - 1),
        ..KnnParams::default()
    };
    build_knn_gaussian(&data, &params).unwrap()
}

/// Label similarity from random nonnegative class scores.
pub fn random_similarity(rng: &mut SplitMix64, n: usize, classes: usize) -> LabelSimilarity {
    let scores = (0..n * classes)
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    label_similarity_from_scores(&Matrix::from_vec(n, classes, scores).unwrap()).unwrap()
}

/// One labeled point per class at distinct random positions; the rest unlabeled.
pub fn random_labels(rng: &mut SplitMix64, n: usize, classes: usize) -> LabelMatrix {
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..classes {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut labels = vec![None; n];
    for (c, &p) in order[..classes].iter().enumerate() {
        labels[p] = Some(c);
    }
    one_hot(&labels, classes).unwrap()
}

/// Block-diagonal weights: `sizes[b]` fully connected points per block with
/// random positive symmetric weights.
pub fn disjoint_cliques(rng: &mut SplitMix64, sizes: &[usize]) -> WeightGraph {
    let n: usize = sizes.iter().sum();
    let mut w = Matrix::zeros(n, n);
    let mut start = 0;
    for &size in sizes {
        for i in start..start + size {
            for j in i + 1..start + size {
                let v = rng.random_range(0.1..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        start += size;
    }
    WeightGraph::from_matrix(w).unwrap()
}

/// Block index of every point for the layout used by [`disjoint_cliques`].
pub fn block_of(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}

/// Dense `n² × n²` lifted operator with entries `S[a][b]·S[c][d]` on column-stacked indices.
pub fn lifted_operator(s: &Matrix) -> Vec<Vec<f64>> {
    let n = s.rows();
    let mut k = vec![vec![0.0; n * n]; n * n];
    // vec index of (row r, col c) is c·n + r; vec(S X Sᵀ)[(j,i)] = Σ S[i][k] X[k][l] S[j][l].
    for j in 0..n {
        for i in 0..n {
            for l in 0..n {
                for kk in 0..n {
                    k[j * n + i][l * n + kk] = s[(i, kk)] * s[(j, l)];
                }
            }
        }
    }
    k
}

fn to_vec(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut v = vec![0.0; n * m.cols()];
    for c in 0..m.cols() {
        for r in 0..n {
            v[c * n + r] = m[(r, c)];
        }
    }
    v
}

fn apply(k: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    k.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Fixed point by partial sums `Σ_{i≥1} (αK)^i vec(Z) + (1−α) Σ_{i≥0} (αK)^i vec(I)`
/// until a term falls below `1e-10`.
pub fn series_affinity(s: &Matrix, z: &Matrix, alpha: f64) -> Matrix {
    let n = s.rows();
    let k = lifted_operator(s);
    let mut z_term = to_vec(z);
    let mut i_term: Vec<f64> = to_vec(&Matrix::identity(n))
        .iter()
        .map(|v| (1.0 - alpha) * v)
        .collect();
    let mut total = i_term.clone();
    for _ in 0..1_000_000 {
        z_term = apply(&k, &z_term).iter().map(|v| alpha * v).collect();
        i_term = apply(&k, &i_term).iter().map(|v| alpha * v).collect();
        let mut size = 0.0f64;
        for (t, (a, b)) in total.iter_mut().zip(z_term.iter().zip(&i_term)) {
            *t += a + b;
            size = size.max(a.abs()).max(b.abs());
        }
        if size < 1e-10 {
            break;
        }
    }
    let mut out = Matrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(r, c)] = total[c * n + r];
        }
    }
    out
}

/// Affinity objective: smoothness of `A + Z` under the lifted Laplacian, minus
/// the fit to `Z`, plus `μ‖A − I‖²` with `μ = 1/α − 1`. Evaluated by explicit sums.
pub fn affinity_objective(s: &Matrix, a: &Matrix, z: &Matrix, alpha: f64) -> f64 {
    let n = s.rows();
    let mu = 1.0 / alpha - 1.0;
    let x = |k: usize, i: usize| a[(k, i)] + z[(k, i)];
    let mut smooth = 0.0;
    for k in 0..n {
        for i in 0..n {
            smooth += x(k, i) * x(k, i);
            for l in 0..n {
                for j in 0..n {
                    smooth -= x(k, i) * s[(k, l)] * x(l, j) * s[(i, j)];
                }
            }
        }
    }
    let mut fit = 0.0;
    let mut reg = 0.0;
    for k in 0..n {
        for i in 0..n {
            fit += a[(k, i)] * z[(k, i)];
            let d = a[(k, i)] - if k == i { 1.0 } else { 0.0 };
            reg += d * d;
        }
    }
    smooth - 2.0 * fit + mu * reg
}

/// Permutes rows and columns: `out[p[i]][p[j]] = m[i][j]`.
pub fn permute_square(m: &Matrix, p: &[usize]) -> Matrix {
    let n = m.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(p[i], p[j])] = m[(i, j)];
        }
    }
    out
}

pub fn permute_rows(m: &Matrix, p: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for (i, &to) in p.iter().enumerate() {
        out.row_mut(to).copy_from_slice(m.row(i));
    }
    out
}

pub fn random_permutation(rng: &mut SplitMix64, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn relative_gap(a: &Matrix, b: &Matrix) -> f64 {
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    diff.sqrt() / b.frobenius_norm()
}

/// `r[t+1] ≤ α·r[t] + slack` for every consecutive pair.
pub fn contracts(trace: &[f64], alpha: f64, slack: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= alpha * w[0] + slack)
}
