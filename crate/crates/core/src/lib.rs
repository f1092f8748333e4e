//! Online Newton on the manifold of stabilizing controllers for linearly
//! constrained online LQG control.
//!
//! * [`linalg`]: Lyapunov/Riccati solvers and spectral helpers.
//! * [`geometry`]: the covariance-weighted metric, its connection, projected
//!   gradients and Hessians, and the stability certificate.
//! * [`optimizers`]: online Newton stepping, baselines, and the offline
//!   Newton solver used for comparators.
//! * [`sim`]: scenario generation, rollouts, exact expected costs, regret
//!   accounting, strong-stability diagnostics and Monte-Carlo aggregation.
//! * [`cli`]: the batch experiment driver behind the `manifold-lqg` binary.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizers;
pub mod sim;

pub use error::{Error, Result};
