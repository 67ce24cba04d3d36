//! `f(x) = ½xᵀAx − bᵀx` with `k(x*) = ½x*ᵀP⁻¹x*`: the dual preconditioned
//! step is then exactly the left-preconditioned iteration `x − P⁻¹(Ax − b)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::func::{check_dim, DualReference, Objective, SmoothFunction};

fn spd_factor(m: &DMatrix<f64>, name: &str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::InvalidParameter(format!("{name} must be square")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::AssumptionViolation(format!("{name} is not symmetric")));
    }
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::AssumptionViolation(format!("{name} is not positive definite")))
}

#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    minimizer: DVector<f64>,
}

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let chol = spd_factor(&a, "A")?;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        let minimizer = chol.solve(&b);
        Ok(Self { a, b, minimizer })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl SmoothFunction for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    fn value_change(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let step = y - x;
        step.dot(&(&self.a * (x + &step * 0.5) - &self.b))
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x)
    }
}

impl Objective for QuadraticObjective {
    fn reference_min(&self) -> Option<(DVector<f64>, f64)> {
        let f_min = -0.5 * self.b.dot(&self.minimizer);
        Some((self.minimizer.clone(), f_min))
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticDualReference {
    precond: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl QuadraticDualReference {
    pub fn new(precond: DMatrix<f64>) -> Result<Self> {
        let chol = spd_factor(&precond, "P")?;
        Ok(Self { precond, chol })
    }
}

impl SmoothFunction for QuadraticDualReference {
    fn dim(&self) -> usize {
        self.precond.nrows()
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        0.5 * y.dot(&self.chol.solve(y))
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(y)
    }

    fn hessian(&self, _y: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.chol.inverse())
    }

    fn check_domain(&self, y: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), y)
    }
}

impl DualReference for QuadraticDualReference {
    fn conjugate_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.precond * x)
    }
}

pub fn quadratic_problem(
    a: DMatrix<f64>,
    b: DVector<f64>,
    precond: DMatrix<f64>,
) -> Result<(QuadraticObjective, QuadraticDualReference)> {
    if precond.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: precond.nrows() });
    }
    Ok((QuadraticObjective::new(a, b)?, QuadraticDualReference::new(precond)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::dual_precon_step;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn exact_preconditioner_example() {
        let a = dmatrix![1.0, 0.0; 0.0, 4.0];
        let (f, k) = quadratic_problem(a.clone(), dvector![0.0, 0.0], a).unwrap();
        let x1 = dual_precon_step(&f, &k, &dvector![1.0, 1.0], 1.0);
        assert!(x1.amax() < 1e-15);
    }

    #[test]
    fn identity_preconditioner_is_gradient_descent() {
        let a = dmatrix![2.0, 0.5; 0.5, 1.0];
        let b = dvector![1.0, -1.0];
        let (f, k) = quadratic_problem(a, b, DMatrix::identity(2, 2)).unwrap();
        let x = dvector![0.3, 0.7];
        let step = dual_precon_step(&f, &k, &x, 4.0);
        let gd = &x - f.gradient(&x) / 4.0;
        assert!((step - gd).amax() < 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let bad = dmatrix![1.0, 2.0; 2.0, 1.0];
        assert!(quadratic_problem(bad.clone(), dvector![0.0, 0.0], DMatrix::identity(2, 2)).is_err());
        assert!(quadratic_problem(DMatrix::identity(2, 2), dvector![0.0, 0.0], bad).is_err());
        let asym = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(quadratic_problem(asym, dvector![0.0, 0.0], DMatrix::identity(2, 2)).is_err());
    }
}
