// SPDX-License-Identifier: Apache-2.0

//! Small synthetic datasets for desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Isotropic Gaussian blobs with centers on the unit circle.
    Blobs,
    /// Two interleaved half circles (two classes only).
    Moons,
    /// Tight, far-apart groups whose kNN graphs are disjoint cliques.
    Cliques,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blobs" => Ok(SynthKind::Blobs),
            "moons" => Ok(SynthKind::Moons),
            "cliques" => Ok(SynthKind::Cliques),
            other => Err(Error::InvalidParameter(format!(
                "unknown synthetic kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub n: usize,
    pub classes: usize,
    /// Standard deviation of the Gaussian jitter.
    pub noise: f64,
    pub seed: u64,
}

/// Points of class `c` are the contiguous block `c·n/classes .. (c+1)·n/classes`.
pub fn generate(params: &SynthParams) -> Result<(Dataset, Vec<usize>)> {
    if params.classes == 0 || params.n < 2 * params.classes {
        return Err(Error::InvalidParameter(format!(
            "need at least two points per class (n = {}, classes = {})",
            params.n, params.classes
        )));
    }
    if !(params.noise >= 0.0 && params.noise.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise must be finite and nonnegative, got {}",
            params.noise
        )));
    }
    if params.kind == SynthKind::Moons && params.classes != 2 {
        return Err(Error::InvalidParameter(
            "moons has exactly two classes".into(),
        ));
    }

    let mut rng = SplitMix64::seed_from_u64(params.seed);
    let truth: Vec<usize> = (0..params.n)
        .map(|i| i * params.classes / params.n)
        .collect();
    let mut data = Vec::with_capacity(params.n * 2);
    for (i, &c) in truth.iter().enumerate() {
        let (x, y) = match params.kind {
            SynthKind::Blobs => {
                let angle = std::f64::consts::TAU * c as f64 / params.classes as f64;
                (angle.cos(), angle.sin())
            }
            SynthKind::Cliques => (10.0 * c as f64, 0.0),
            SynthKind::Moons => {
                let start = params.n * c / params.classes;
                let count = params.n * (c + 1) / params.classes - start;
                let t = std::f64::consts::PI * (i - start) as f64 / (count - 1).max(1) as f64;
                if c == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                }
            }
        };
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        data.push(x + params.noise * dx);
        data.push(y + params.noise * dy);
    }
    Ok((Dataset::new(Matrix::from_vec(params.n, 2, data)?)?, truth))
}
