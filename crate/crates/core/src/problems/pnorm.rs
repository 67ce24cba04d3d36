//! p-norm regression `f(x) = ‖Ax − b‖_p^p` and its dual reference
//! `k(x*) = ((1 + ‖x*‖²)^{q/2} − 1) / q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::func::{abs_pow, check_dim, signed_pow, DualReference, Objective, SmoothFunction};

#[derive(Debug, Clone)]
pub struct PNormObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    p: f64,
}

impl PNormObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p-norm regression needs 2 <= p < inf, got {p}")));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(Error::InvalidParameter("empty design matrix".into()));
        }
        Ok(Self { a, b, p })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    /// `|r|^{p−2}` per row.
    fn weights(&self, r: &DVector<f64>) -> DVector<f64> {
        r.map(|ri| abs_pow(ri, self.p - 2.0))
    }
}

/// `|r + δ|^p − |r|^p` without cancellation when `δ` is small against `r`.
fn power_change(r: f64, delta: f64, p: f64) -> f64 {
    let t = delta / r;
    if r != 0.0 && t > -1.0 {
        abs_pow(r, p) * (p * t.ln_1p()).exp_m1()
    } else {
        abs_pow(r + delta, p) - abs_pow(r, p)
    }
}

impl SmoothFunction for PNormObjective {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = self.residual(x);
        r.iter().map(|&ri| abs_pow(ri, self.p)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.residual(x);
        let w = r.map(|ri| signed_pow(ri, self.p - 1.0));
        self.a.tr_mul(&w) * self.p
    }

    fn value_change(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let r = self.residual(x);
        let delta = &self.a * (y - x);
        r.iter().zip(delta.iter()).map(|(&ri, &di)| power_change(ri, di, self.p)).sum()
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let w = self.weights(&self.residual(x));
        Some(weighted_gram(&self.a, &w) * (self.p * (self.p - 1.0)))
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x)
    }
}

impl Objective for PNormObjective {}

/// `Σ w_i A_iᵀ A_i`.
pub(crate) fn weighted_gram(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = a.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[i];
    }
    let g = a.tr_mul(&scaled);
    (&g + g.transpose()) * 0.5
}

/// Checks `rank(A) = d` via singular values: `σ_min > 1e-10·σ_max`.
pub fn check_full_rank(a: &DMatrix<f64>) -> Result<()> {
    let (n, d) = a.shape();
    if n < d {
        return Err(Error::AssumptionViolation(format!("A has {n} rows, fewer than its {d} columns")));
    }
    // QR first so the SVD runs on a d×d factor.
    let r = a.clone().qr().r();
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= 1e-10 * max {
        return Err(Error::AssumptionViolation(format!(
            "A is rank deficient (sigma_min = {min:.3e}, sigma_max = {max:.3e})"
        )));
    }
    Ok(())
}

/// `k(x*) = ((1 + ‖x*‖²)^{q/2} − 1)/q`, quadratic near the origin and of
/// order `‖x*‖^q` at infinity.
#[derive(Debug, Clone, Copy)]
pub struct PNormDualReference {
    dim: usize,
    p: f64,
}

impl PNormDualReference {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p-norm regression needs 2 <= p < inf, got {p}")));
        }
        Ok(Self { dim, p })
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `(1 + s)^e` computed through `log1p` so large `s` neither overflows
    /// nor underflows.
    fn pow1p(s: f64, e: f64) -> f64 {
        (e * s.ln_1p()).exp()
    }

    /// Radial profile `τ (1 + τ²)^{(q−2)/2}` of the gradient map.
    fn radial(&self, tau: f64) -> f64 {
        tau * Self::pow1p(tau * tau, (self.q() - 2.0) / 2.0)
    }
}

impl SmoothFunction for PNormDualReference {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let q = self.q();
        ((q / 2.0) * y.norm_squared().ln_1p()).exp_m1() / q
    }

    fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        y * Self::pow1p(y.norm_squared(), (self.q() - 2.0) / 2.0)
    }

    fn hessian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let q = self.q();
        let s = y.norm_squared();
        let mut h = DMatrix::identity(self.dim, self.dim) * Self::pow1p(s, (q - 2.0) / 2.0);
        h.ger(
            (q - 2.0) * Self::pow1p(s, (q - 4.0) / 2.0),
            y,
            y,
            1.0,
        );
        Some(h)
    }

    fn check_domain(&self, y: &DVector<f64>) -> Result<()> {
        check_dim(self.dim, y)
    }
}

impl DualReference for PNormDualReference {
    /// Inverts the radial profile by safeguarded Newton iteration.
    fn conjugate_gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let t = x.norm();
        if t == 0.0 {
            return Some(DVector::zeros(self.dim));
        }
        if !t.is_finite() {
            return None;
        }
        let q = self.q();
        // radial(τ) <= τ, so the root is at least t.
        let mut lo = t;
        let mut hi = t;
        while self.radial(hi) < t {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
        }
        let mut tau = 0.5 * (lo + hi);
        for _ in 0..200 {
            let phi = self.radial(tau) - t;
            if phi == 0.0 {
                break;
            }
            if phi > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let s = tau * tau;
            let dphi = Self::pow1p(s, (q - 4.0) / 2.0) * (1.0 + (q - 1.0) * s);
            let mut next = tau - phi / dphi;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - tau).abs() <= 1e-16 * tau {
                tau = next;
                break;
            }
            tau = next;
        }
        Some(x * (tau / t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn value_change_matches_difference() {
        let f = PNormObjective::new(dmatrix![1.0, 2.0; -1.0, 0.5; 3.0, 1.0], dvector![0.3, -1.0, 2.0], 3.5).unwrap();
        let x = dvector![0.4, -0.2];
        for y in [dvector![1.0, 1.0], dvector![-2.0, 0.1], dvector![0.4, -0.2]] {
            let direct = f.value(&y) - f.value(&x);
            assert!((f.value_change(&x, &y) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
        // A step far below the rounding of f itself still has the right sign.
        let f = PNormObjective::new(dmatrix![1.0], dvector![1e4], 4.0).unwrap();
        let x = dvector![0.0];
        assert!(f.value_change(&x, &dvector![1e-9]) < 0.0);
        assert!(f.value_change(&x, &dvector![-1e-9]) > 0.0);
    }

    #[test]
    fn scalar_example() {
        let f = PNormObjective::new(dmatrix![1.0], dvector![0.0], 4.0).unwrap();
        let x = dvector![2.0];
        assert_eq!(f.value(&x), 16.0);
        assert_eq!(f.gradient(&x)[0], 32.0);
        assert_eq!(f.hessian(&x).unwrap()[(0, 0)], 48.0);
    }

    #[test]
    fn zero_at_consistent_solution() {
        let a = dmatrix![1.0, 2.0; -1.0, 0.5; 3.0, 1.0];
        let x = dvector![0.25, -1.5];
        let b = &a * &x;
        let f = PNormObjective::new(a, b, 3.0).unwrap();
        assert_eq!(f.value(&x), 0.0);
        assert_eq!(f.gradient(&x), DVector::zeros(2));
    }

    #[test]
    fn rejects_p_below_two() {
        assert!(PNormObjective::new(dmatrix![1.0], dvector![0.0], 1.5).is_err());
        assert!(PNormDualReference::new(1, 1.0).is_err());
    }

    #[test]
    fn dual_gradient_example() {
        let k = PNormDualReference::new(1, 4.0).unwrap();
        let g = k.gradient(&dvector![3.0])[0];
        assert!((g - 3.0 * 10f64.powf(-1.0 / 3.0)).abs() < 1e-12);
        assert!((g - 1.392477).abs() < 1e-6);
    }

    #[test]
    fn dual_reference_at_origin() {
        let k = PNormDualReference::new(3, 4.0).unwrap();
        let z = DVector::zeros(3);
        assert_eq!(k.value(&z), 0.0);
        assert_eq!(k.gradient(&z), z);
        assert_eq!(k.hessian(&z).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn huge_dual_points_stay_finite() {
        let k = PNormDualReference::new(2, 4.0).unwrap();
        let y = dvector![1e100, -1e100];
        assert!(k.value(&y).is_finite());
        assert!(k.gradient(&y).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rank_check() {
        assert!(check_full_rank(&dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0]).is_ok());
        assert!(check_full_rank(&dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0]).is_err());
        assert!(check_full_rank(&dmatrix![1.0, 2.0]).is_err());
    }
}
