//! One-dimensional shifted power `f(x) = |x − b|^p / p` paired with
//! `k(x*) = |x*|^q / q`, for which `k` equals `f*` up to a linear term and
//! the dual relative constants are exactly `L* = μ* = 1`.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::func::{abs_pow, check_dim, signed_pow, DualReference, Objective, SmoothFunction};

#[derive(Debug, Clone, Copy)]
pub struct PowerObjective {
    pub shift: f64,
    pub p: f64,
}

impl PowerObjective {
    pub fn new(shift: f64, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("power must satisfy 2 <= p < inf, got {p}")));
        }
        Ok(Self { shift, p })
    }
}

impl SmoothFunction for PowerObjective {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        abs_pow(x[0] - self.shift, self.p) / self.p
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        dvector![signed_pow(x[0] - self.shift, self.p - 1.0)]
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(dmatrix![(self.p - 1.0) * abs_pow(x[0] - self.shift, self.p - 2.0)])
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(1, x)
    }
}

impl Objective for PowerObjective {
    fn reference_min(&self) -> Option<(DVector<f64>, f64)> {
        Some((dvector![self.shift], 0.0))
    }
}

/// `k(x*) = |x*|^q / q` with `q = p/(p−1)`.
#[derive(Debug, Clone, Copy)]
pub struct PowerDualReference {
    pub p: f64,
}

impl PowerDualReference {
    pub fn new(p: f64) -> Result<Self> {
        PowerObjective::new(0.0, p)?;
        Ok(Self { p })
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

impl SmoothFunction for PowerDualReference {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let q = self.q();
        abs_pow(y[0], q) / q
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        dvector![signed_pow(y[0], 1.0 / (self.p - 1.0))]
    }

    /// Undefined at the origin when `q < 2`.
    fn hessian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        if self.p == 2.0 {
            return Some(dmatrix![1.0]);
        }
        if y[0] == 0.0 {
            return None;
        }
        let e = 1.0 / (self.p - 1.0);
        Some(dmatrix![e * abs_pow(y[0], e - 1.0)])
    }

    fn check_domain(&self, y: &DVector<f64>) -> Result<()> {
        check_dim(1, y)
    }
}

impl DualReference for PowerDualReference {
    fn conjugate_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(dvector![signed_pow(x[0], self.p - 1.0)])
    }
}

pub fn power1d_problem(shift: f64, p: f64) -> Result<(PowerObjective, PowerDualReference)> {
    Ok((PowerObjective::new(shift, p)?, PowerDualReference::new(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::bregman_divergence;
    use crate::solver::{solve, SolverConfig, StepRule};

    #[test]
    fn rejects_small_power() {
        assert!(power1d_problem(0.0, 1.5).is_err());
    }

    #[test]
    fn dual_divergence_matches_primal() {
        let (f, k) = power1d_problem(1.0, 4.0).unwrap();
        let x = dvector![2.0];
        let y = dvector![0.0];
        let dk = bregman_divergence(&k, &f.gradient(&y), &f.gradient(&x)).unwrap();
        let df = bregman_divergence(&f, &x, &y).unwrap();
        assert!((df - 2.0).abs() < 1e-15);
        assert!((dk - 2.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_identity() {
        let (f, k) = power1d_problem(-0.4, 3.5).unwrap();
        for &x in &[-7.0, -1.0, 0.3, 2.0, 11.0] {
            let x = dvector![x];
            let fpp = f.hessian(&x).unwrap()[(0, 0)];
            let kpp = k.hessian(&f.gradient(&x)).unwrap()[(0, 0)];
            assert!((fpp * kpp - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn one_step_from_anywhere() {
        for &b in &[-3.0, 0.0, 2.5] {
            let (f, k) = power1d_problem(b, 4.0).unwrap();
            let cfg = SolverConfig::new(StepRule::Fixed(1.0));
            let trace = solve(&f, &k, &dvector![b + 5.0], &cfg).unwrap();
            let x1 = trace.records[1].x.as_ref().unwrap()[0];
            assert!((x1 - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn quadratic_case_is_identity_preconditioner() {
        let (f, k) = power1d_problem(0.0, 2.0).unwrap();
        let x = dvector![3.0];
        assert_eq!(k.gradient(&f.gradient(&x)), x);
        assert_eq!(k.hessian(&dvector![0.0]).unwrap()[(0, 0)], 1.0);
    }
}
