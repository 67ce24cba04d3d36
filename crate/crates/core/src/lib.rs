//! Dual space preconditioned gradient descent.
//!
//! Minimizes a convex objective `f` with the iteration
//! `x_{i+1} = x_i − (1/L*_i) ∇k(∇f(x_i))`, where the dual reference `k` is a
//! Legendre function minimized at the origin that models the conjugate `f*`.
//! The crate ships the method with fixed, doubling and adaptive inverse step
//! sizes, gradient descent and mirror descent baselines, p-norm regression
//! and exponential penalty problems, and sampled certification of the dual
//! relative smoothness and strong convexity constants.

pub mod baselines;
pub mod bregman;
pub mod certify;
pub mod error;
pub mod fd;
pub mod func;
pub mod linalg;
pub mod problems;
pub mod solver;

pub use nalgebra::{DMatrix, DVector};

pub use bregman::bregman_divergence;
pub use certify::{certify_instance, CertificateReport, CertifyOptions};
pub use error::{Error, Result};
pub use func::{DualReference, HalfSquaredNorm, Objective, SmoothFunction};
pub use problems::{generate_random_instance, GenerateSpec, Problem, ProblemInstance, ProblemKind};
pub use solver::{
    dual_precon_step, solve, verify_rate_bounds, IterRecord, IterateTrace, RateReport, SolverConfig, StepRule,
    Termination,
};
