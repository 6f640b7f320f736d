// SPDX-License-Identifier: Apache-2.0

//! Graph-based semi-supervised learning by alternating diffusion.
//!
//! Graph construction and label propagation are both posed as regularized
//! function estimation on a graph and solved by two diffusion processes:
//!
//! * [`propagation`] spreads labels over a fixed affinity (`F ← αSF + (1−α)Y`),
//! * [`diffusion`] learns the affinity from the labels (`A ← αS(A+Z)Sᵀ + (1−α)I`),
//! * [`solver`] alternates the two until the labels stop moving.
//!
//! [`graph`] builds the initial kNN Gaussian graph, [`harness`] runs seeded
//! benchmark trials, and [`numerics`] is the small dense kernel underneath.

pub mod diffusion;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod propagation;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use numerics::Matrix;
