//! Exponential penalty relaxation of `min cᵀx s.t. Ax ≤ b`:
//! `f_τ(x) = cᵀx + τ Σ exp((A_i x − b_i)/τ)`, paired with the linearly
//! growing dual reference `k(x*) = ‖x*‖ − log(1 + ‖x*‖)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::func::{check_dim, DualReference, Objective, SmoothFunction};
use crate::problems::pnorm::weighted_gram;

/// Largest penalty exponent accepted before evaluation is refused.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone)]
pub struct ExpPenaltyObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    tau: f64,
}

impl ExpPenaltyObjective {
    /// Rows of `A` are rescaled to unit norm, with `b` rescaled alongside so
    /// the polytope is unchanged.
    pub fn new(mut a: DMatrix<f64>, mut b: DVector<f64>, c: DVector<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature must be positive, got {tau}")));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if a.ncols() != c.len() {
            return Err(Error::DimensionMismatch { expected: a.ncols(), got: c.len() });
        }
        normalize_rows(&mut a, &mut b)?;
        Ok(Self { a, b, c, tau })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn cost(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn exponents(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x - &self.b) / self.tau
    }

    /// `α(x) = max_i (A_i x − b_i)`; negative strictly inside the polytope.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).max()
    }
}

pub(crate) fn normalize_rows(a: &mut DMatrix<f64>, b: &mut DVector<f64>) -> Result<()> {
    for i in 0..a.nrows() {
        let norm = a.row(i).norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter(format!("constraint row {i} is zero")));
        }
        if norm != 1.0 {
            a.row_mut(i).scale_mut(1.0 / norm);
            b[i] /= norm;
        }
    }
    Ok(())
}

impl SmoothFunction for ExpPenaltyObjective {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let z = self.exponents(x);
        self.c.dot(x) + self.tau * z.iter().map(|zi| zi.exp()).sum::<f64>()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let w = self.exponents(x).map(f64::exp);
        self.a.tr_mul(&w) + &self.c
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let w = self.exponents(x).map(|zi| zi.exp() / self.tau);
        Some(weighted_gram(&self.a, &w))
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x)?;
        let worst = self.exponents(x).max();
        if !(worst <= EXPONENT_LIMIT) {
            return Err(Error::NumericalRange {
                exponent: worst,
                limit: EXPONENT_LIMIT,
            });
        }
        Ok(())
    }
}

impl Objective for ExpPenaltyObjective {}

/// `k(x*) = ‖x*‖ − log(‖x*‖ + 1)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpDualReference {
    dim: usize,
}

impl ExpDualReference {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

/// `t − log(1 + t)` without cancellation for small `t`.
fn radial_value(t: f64) -> f64 {
    if t < 1e-2 {
        // alternating series t²/2 − t³/3 + ...
        let mut sum = 0.0;
        let mut pow = t * t;
        for n in 2..12 {
            let term = pow / n as f64;
            sum += if n % 2 == 0 { term } else { -term };
            pow *= t;
        }
        sum
    } else {
        t - t.ln_1p()
    }
}

impl SmoothFunction for ExpDualReference {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        radial_value(y.norm())
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        y / (y.norm() + 1.0)
    }

    /// Continuous extension `I` at the origin.
    fn hessian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let t = y.norm();
        let mut h = DMatrix::identity(self.dim, self.dim) / (t + 1.0);
        if t > 0.0 {
            h.ger(-1.0 / ((t + 1.0) * (t + 1.0) * t), y, y, 1.0);
        }
        Some(h)
    }

    fn check_domain(&self, y: &DVector<f64>) -> Result<()> {
        check_dim(self.dim, y)
    }
}

impl DualReference for ExpDualReference {
    /// Defined on the open unit ball.
    fn conjugate_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let t = x.norm();
        if t < 1.0 {
            Some(x / (1.0 - t))
        } else {
            None
        }
    }
}
