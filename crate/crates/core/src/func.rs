//! Function abstractions shared by the solver, the baselines and the
//! certification routines.
//!
//! Every shipped function is evaluated only at interior points where it is
//! differentiable, so a plain gradient is all the machinery needs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A convex function with gradient and (optionally) Hessian.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `f(y) − f(x)`. Implementations override this when the difference can
    /// be formed more accurately than by subtracting two rounded values.
    fn value_change(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.value(y) - self.value(x)
    }

    /// `None` when no closed form is available at `x`.
    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// Rejects points where the function cannot be evaluated.
    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x)
    }

    fn in_domain(&self, x: &DVector<f64>) -> bool {
        self.check_domain(x).is_ok()
    }
}

/// The objective `f` being minimized.
pub trait Objective: SmoothFunction {
    /// Known minimizer and minimum value, when available in closed form.
    fn reference_min(&self) -> Option<(DVector<f64>, f64)> {
        None
    }
}

/// A Legendre function `k` uniquely minimized at the origin; its gradient
/// preconditions `∇f` in the dual space.
pub trait DualReference: SmoothFunction {
    /// `k(0)`.
    fn min_value(&self) -> f64 {
        0.0
    }

    /// `∇k*`, the inverse of the gradient map, when it has a closed form or
    /// a cheap scalar solve. `None` outside the domain of `k*`.
    fn conjugate_gradient(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

pub(crate) fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coordinate".into()));
    }
    Ok(())
}

/// `½‖x‖²`. Serves both as objective and as dual reference.
#[derive(Debug, Clone, Copy)]
pub struct HalfSquaredNorm {
    pub dim: usize,
}

impl HalfSquaredNorm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothFunction for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
}

impl Objective for HalfSquaredNorm {
    fn reference_min(&self) -> Option<(DVector<f64>, f64)> {
        Some((DVector::zeros(self.dim), 0.0))
    }
}

impl DualReference for HalfSquaredNorm {
    fn conjugate_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(x.clone())
    }
}

/// Affine function `⟨a, x⟩ + c`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub slope: DVector<f64>,
    pub offset: f64,
}

impl SmoothFunction for Affine {
    fn dim(&self) -> usize {
        self.slope.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.slope.dot(x) + self.offset
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.slope.clone()
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let d = self.slope.len();
        Some(DMatrix::zeros(d, d))
    }
}

/// Signed power `sign(t)·|t|^e`, with exact roots for the exponents that
/// show up for integer `p`.
pub(crate) fn signed_pow(t: f64, e: f64) -> f64 {
    t.signum() * abs_pow(t, e)
}

pub(crate) fn abs_pow(t: f64, e: f64) -> f64 {
    let a = t.abs();
    if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else if e == 3.0 {
        a * a * a
    } else if e == 0.5 {
        a.sqrt()
    } else if (e - 1.0 / 3.0).abs() < 1e-15 {
        a.cbrt()
    } else if e == 0.0 {
        1.0
    } else {
        a.powf(e)
    }
}
