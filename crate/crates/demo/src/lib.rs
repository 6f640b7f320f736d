// SPDX-License-Identifier: Apache-2.0

//! Browser playground: generate a 2-D dataset, classify it from a few seeded
//! labels, and inspect the learned affinity.
//!
//! [`Playground`] is plain Rust and is what the tests drive; the
//! `wasm_bindgen` layer only converts errors and results for JavaScript.

use adp_core::graph::{build_knn_gaussian, KnnParams, WeightGraph};
use adp_core::harness::{accuracy, run_method, sample_labels, Method};
use adp_core::solver::AdpConfig;
use adp_core::synth::{generate, SynthKind, SynthParams};
use adp_core::{Matrix, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct Classified {
    pub method: Method,
    /// Class per point, `-1` when undecided.
    pub predictions: Vec<i32>,
    pub labeled: Vec<usize>,
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_trace: Vec<f64>,
}

pub struct Playground {
    points: Matrix,
    truth: Vec<usize>,
    graph: WeightGraph,
    affinity: Option<Matrix>,
}

impl Playground {
    pub fn create(
        kind: &str,
        n: usize,
        classes: usize,
        noise: f64,
        seed: u64,
        k: usize,
    ) -> Result<Self> {
        let kind: SynthKind = kind.parse()?;
        let (data, truth) = generate(&SynthParams {
            kind,
            n,
            classes,
            noise,
            seed,
        })?;
        let knn = KnnParams {
            k: k.clamp(1, n - 1),
            ..KnnParams::default()
        };
        let graph = build_knn_gaussian(&data, &knn)?;
        Ok(Playground {
            points: data.features().clone(),
            truth,
            graph,
            affinity: None,
        })
    }

    /// Interleaved `x, y` coordinates.
    pub fn points(&self) -> &[f64] {
        self.points.as_slice()
    }

    pub fn truth(&self) -> &[usize] {
        &self.truth
    }

    pub fn classify(
        &mut self,
        method: &str,
        per_class: usize,
        seed: u64,
        alpha: f64,
    ) -> Result<Classified> {
        let method: Method = method.parse()?;
        let y = sample_labels(&self.truth, per_class, seed)?;
        let cfg = AdpConfig {
            alpha,
            ..AdpConfig::default()
        };
        let out = run_method(method, &self.graph, &y, &cfg)?;
        let acc = accuracy(&out.predictions, &self.truth, &y.unlabeled())?;
        self.affinity = out.affinity;
        Ok(Classified {
            method,
            predictions: out
                .predictions
                .iter()
                .map(|p| p.map_or(-1, |c| c as i32))
                .collect(),
            labeled: y.labeled().to_vec(),
            accuracy: acc,
            iterations: out.iterations,
            converged: out.converged,
            residual_trace: out.residual_trace,
        })
    }

    /// Row-major `n × n` intensities in `[0, 1]`: the last learned affinity,
    /// or the kNN weights before any diffusion has run. The diagonal is
    /// skipped when scaling so off-diagonal structure stays visible.
    pub fn heatmap(&self) -> Vec<f64> {
        let m = self.affinity.as_ref().unwrap_or(self.graph.weights());
        let n = m.rows();
        let mut peak = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    peak = peak.max(m[(i, j)]);
                }
            }
        }
        let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
        m.as_slice()
            .iter()
            .map(|v| (v * scale).clamp(0.0, 1.0))
            .collect()
    }
}

fn js_err(e: adp_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo(Playground);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        kind: &str,
        n: usize,
        classes: usize,
        noise: f64,
        seed: u32,
        k: usize,
    ) -> std::result::Result<Demo, JsError> {
        Playground::create(kind, n, classes, noise, seed.into(), k)
            .map(Demo)
            .map_err(js_err)
    }

    pub fn points(&self) -> Vec<f64> {
        self.0.points().to_vec()
    }

    pub fn truth(&self) -> Vec<u32> {
        self.0.truth().iter().map(|&c| c as u32).collect()
    }

    /// JSON-encoded classification result.
    pub fn classify(
        &mut self,
        method: &str,
        per_class: usize,
        seed: u32,
        alpha: f64,
    ) -> std::result::Result<String, JsError> {
        let out = self
            .0
            .classify(method, per_class, seed.into(), alpha)
            .map_err(js_err)?;
        serde_json::to_string(&out).map_err(|e| JsError::new(&e.to_string()))
    }

    pub fn heatmap(&self) -> Vec<f64> {
        self.0.heatmap()
    }
}
