// SPDX-License-Identifier: Apache-2.0

//! Initial weight graph from raw features and its symmetric normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_K_SIGMA: usize = 27;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-12;

/// Points as rows of a feature matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Matrix,
}

impl Dataset {
    pub fn new(features: Matrix) -> Result<Self> {
        if features.rows() < 2 {
            return Err(Error::Validation(format!(
                "dataset needs at least 2 points, got {}",
                features.rows()
            )));
        }
        if features.cols() < 1 {
            return Err(Error::Validation("dataset has zero feature columns".into()));
        }
        features.check_finite()?;
        Ok(Dataset { features })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMode {
    /// `exp(−d² / (σ_i σ_j))` with σ_i the mean distance from point i to its
    /// `k_sigma` nearest neighbors.
    Adaptive,
    /// `exp(−d² / (2σ²))` with σ the mean of all `k_sigma`-NN distances.
    Global,
}

impl std::str::FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adaptive" => Ok(SigmaMode::Adaptive),
            "global" => Ok(SigmaMode::Global),
            other => Err(Error::InvalidParameter(format!(
                "unknown sigma mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub k_sigma: usize,
    pub sigma_mode: SigmaMode,
    /// Lower bound applied to every bandwidth. `None` turns zero bandwidths
    /// into [`Error::DegenerateBandwidth`].
    pub sigma_floor: Option<f64>,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: DEFAULT_K,
            k_sigma: DEFAULT_K_SIGMA,
            sigma_mode: SigmaMode::Adaptive,
            sigma_floor: Some(DEFAULT_SIGMA_FLOOR),
        }
    }
}

/// How the kernel bandwidths were resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPolicy {
    pub mode: SigmaMode,
    pub k_sigma_requested: usize,
    pub k_sigma_used: usize,
    /// Set when `k_sigma` had to be clamped to `n − 1`.
    pub k_sigma_clamped: bool,
    /// Per-point bandwidths (adaptive) or a single value (global).
    pub sigmas: Vec<f64>,
    /// Number of bandwidths raised to the floor.
    pub floored: usize,
}

#[derive(Debug, Clone)]
pub struct WeightGraph {
    w: Matrix,
    k: usize,
    sigma_policy: SigmaPolicy,
}

impl WeightGraph {
    /// Wraps an explicit weight matrix. It must be square, symmetric and nonnegative.
    pub fn from_matrix(w: Matrix) -> Result<Self> {
        validate_weights(&w)?;
        let n = w.rows();
        let k = (0..n)
            .map(|i| w.row(i).iter().filter(|&&v| v != 0.0).count())
            .max()
            .unwrap_or(0);
        Ok(WeightGraph {
            w,
            k,
            sigma_policy: SigmaPolicy {
                mode: SigmaMode::Global,
                k_sigma_requested: 0,
                k_sigma_used: 0,
                k_sigma_clamped: false,
                sigmas: Vec::new(),
                floored: 0,
            },
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma_policy(&self) -> &SigmaPolicy {
        &self.sigma_policy
    }

    pub fn len(&self) -> usize {
        self.w.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.rows() == 0
    }

    pub fn normalize(&self) -> NormalizedGraph {
        symmetric_normalize(&self.w)
    }
}

fn validate_weights(w: &Matrix) -> Result<()> {
    if !w.is_square() {
        return Err(Error::Validation(format!(
            "weight matrix must be square, got {:?}",
            w.shape()
        )));
    }
    if !w.is_symmetric() {
        return Err(Error::Validation("weight matrix must be symmetric".into()));
    }
    if w.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::Validation(
            "weight matrix must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// `D^{-1/2} W D^{-1/2}` plus the degrees it was built from.
#[derive(Debug, Clone)]
pub struct NormalizedGraph {
    s: Matrix,
    degrees: Vec<f64>,
}

impl NormalizedGraph {
    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.s.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.rows() == 0
    }

    /// Vertices with zero degree; their rows and columns are all zero.
    pub fn isolated(&self) -> Vec<usize> {
        self.degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Euclidean distances between all pairs of rows.
pub fn pairwise_distances(data: &Dataset) -> Matrix {
    let x = data.features();
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let dist = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Indices of the `k` nearest other points of `i`, nearest first; ties go to
/// the smaller index.
fn nearest(dist: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.rows()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Gaussian kNN graph, symmetrized by elementwise maximum, zero diagonal.
pub fn build_knn_gaussian(data: &Dataset, params: &KnnParams) -> Result<WeightGraph> {
    let n = data.len();
    if params.k == 0 || params.k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k < n ({n}), got {}",
            params.k
        )));
    }
    if params.k_sigma == 0 {
        return Err(Error::InvalidParameter("k_sigma must be at least 1".into()));
    }
    if let Some(floor) = params.sigma_floor {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma floor must be positive, got {floor}"
            )));
        }
    }
    let k_sigma = params.k_sigma.min(n - 1);
    let dist = pairwise_distances(data);
    let ranked: Vec<Vec<usize>> = (0..n)
        .map(|i| nearest(&dist, i, params.k.max(k_sigma)))
        .collect();

    let local: Vec<f64> = ranked
        .iter()
        .enumerate()
        .map(|(i, nb)| nb[..k_sigma].iter().map(|&j| dist[(i, j)]).sum::<f64>() / k_sigma as f64)
        .collect();
    let mut sigmas = match params.sigma_mode {
        SigmaMode::Adaptive => local,
        SigmaMode::Global => vec![local.iter().sum::<f64>() / n as f64],
    };
    let mut floored = 0;
    for (idx, s) in sigmas.iter_mut().enumerate() {
        match params.sigma_floor {
            Some(floor) if *s < floor => {
                *s = floor;
                floored += 1;
            }
            None if *s <= 0.0 => return Err(Error::DegenerateBandwidth { point: idx }),
            _ => {}
        }
    }

    let mut w = Matrix::zeros(n, n);
    for (i, nb) in ranked.iter().enumerate() {
        for &j in &nb[..params.k] {
            let d2 = dist[(i, j)] * dist[(i, j)];
            let denom = match params.sigma_mode {
                SigmaMode::Adaptive => sigmas[i] * sigmas[j],
                SigmaMode::Global => 2.0 * sigmas[0] * sigmas[0],
            };
            w[(i, j)] = (-d2 / denom).exp();
        }
    }
    let mut w = symmetrize_max(&w)?;
    for i in 0..n {
        w[(i, i)] = 0.0;
    }

    Ok(WeightGraph {
        w,
        k: params.k,
        sigma_policy: SigmaPolicy {
            mode: params.sigma_mode,
            k_sigma_requested: params.k_sigma,
            k_sigma_used: k_sigma,
            k_sigma_clamped: k_sigma != params.k_sigma,
            sigmas,
            floored,
        },
    })
}

/// `max(w, wᵀ)` elementwise.
pub fn symmetrize_max(w: &Matrix) -> Result<Matrix> {
    w.max_elementwise(&w.transpose())
}

/// `s[i,j] = w[i,j] / √(D_ii D_jj)` with zero rows for isolated vertices.
pub fn symmetric_normalize(w: &Matrix) -> NormalizedGraph {
    let degrees = w.row_sums();
    let n = w.rows();
    let mut s = Matrix::zeros(n, w.cols());
    for i in 0..n {
        if degrees[i] <= 0.0 {
            continue;
        }
        for (j, (out, &wij)) in s.row_mut(i).iter_mut().zip(w.row(i)).enumerate() {
            if wij != 0.0 {
                *out = wij / (degrees[i] * degrees[j]).sqrt();
            }
        }
    }
    NormalizedGraph { s, degrees }
}

/// Power-iteration estimate of the largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius_estimate(s: &Matrix, iterations: usize) -> f64 {
    let n = s.rows();
    if n == 0 {
        return 0.0;
    }
    // Non-constant start so bipartite or disconnected spectra are not missed.
    let mut v = Matrix::from_vec(
        n,
        1,
        (0..n).map(|i| 1.0 + (i as f64 * 0.618).fract()).collect(),
    )
    .expect("finite start vector");
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = v.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let unit = v.scale(1.0 / norm).expect("finite");
        let next = s.matmul(&unit).expect("square operator");
        estimate = next.frobenius_norm();
        v = next;
    }
    estimate
}
