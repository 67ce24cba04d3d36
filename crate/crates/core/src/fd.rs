//! Central finite differences, used as an independent oracle for analytic
//! derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::func::SmoothFunction;

pub fn default_gradient_step(x: &DVector<f64>) -> f64 {
    1e-5 * (1.0 + x.norm())
}

pub fn default_hessian_step(x: &DVector<f64>) -> f64 {
    1e-3 * (1.0 + x.norm())
}

/// Componentwise `(g(x + h e_j) − g(x − h e_j)) / 2h`.
pub fn finite_diff_gradient<G: SmoothFunction + ?Sized>(
    g: &G,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    g.check_domain(x)?;
    let mut out = DVector::zeros(x.len());
    let mut probe = x.clone();
    for j in 0..x.len() {
        let xj = x[j];
        probe[j] = xj + h;
        g.check_domain(&probe)?;
        let up = g.value(&probe);
        probe[j] = xj - h;
        g.check_domain(&probe)?;
        let down = g.value(&probe);
        probe[j] = xj;
        out[j] = (up - down) / (2.0 * h);
    }
    Ok(out)
}

/// Second-order central differences of the value, symmetrized.
pub fn finite_diff_hessian<G: SmoothFunction + ?Sized>(
    g: &G,
    x: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    g.check_domain(x)?;
    let d = x.len();
    let mut out = DMatrix::zeros(d, d);
    let f0 = g.value(x);
    let mut probe = x.clone();
    let eval = |probe: &DVector<f64>| -> Result<f64> {
        g.check_domain(probe)?;
        Ok(g.value(probe))
    };
    for i in 0..d {
        probe[i] = x[i] + h;
        let up = eval(&probe)?;
        probe[i] = x[i] - h;
        let down = eval(&probe)?;
        probe[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * h;
                probe[j] = x[j] + sj * h;
                let v = eval(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Central differences of the analytic gradient; a cheaper and more
/// accurate Hessian oracle when the gradient itself has been validated.
pub fn finite_diff_jacobian_of_gradient<G: SmoothFunction + ?Sized>(
    g: &G,
    x: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    g.check_domain(x)?;
    let d = x.len();
    let mut out = DMatrix::zeros(d, d);
    let mut probe = x.clone();
    for j in 0..d {
        probe[j] = x[j] + h;
        g.check_domain(&probe)?;
        let up = g.gradient(&probe);
        probe[j] = x[j] - h;
        g.check_domain(&probe)?;
        let down = g.gradient(&probe);
        probe[j] = x[j];
        out.set_column(j, &((up - down) / (2.0 * h)));
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// `‖a − b‖ / max(‖b‖, floor)`.
pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{Affine, HalfSquaredNorm};
    use crate::problems::power1d::PowerObjective;
    use nalgebra::dvector;

    #[test]
    fn gradient_of_half_squared_norm() {
        let g = HalfSquaredNorm::new(2);
        let grad = finite_diff_gradient(&g, &dvector![3.0, 4.0], 1e-5).unwrap();
        assert!((grad - dvector![3.0, 4.0]).amax() < 1e-6);
    }

    #[test]
    fn gradient_of_quartic() {
        let g = PowerObjective::new(0.0, 4.0).unwrap();
        let grad = finite_diff_gradient(&g, &dvector![2.0], 1e-4).unwrap();
        assert!((grad[0] - 8.0).abs() < 1e-5);
    }

    #[test]
    fn gradient_of_constant() {
        let g = Affine { slope: DVector::zeros(3), offset: 7.0 };
        let grad = finite_diff_gradient(&g, &dvector![1.0, -2.0, 3.0], 1e-5).unwrap();
        assert_eq!(grad, DVector::zeros(3));
    }

    #[test]
    fn hessian_of_half_squared_norm() {
        let g = HalfSquaredNorm::new(3);
        let x = dvector![0.5, -1.0, 2.0];
        let hess = finite_diff_hessian(&g, &x, default_hessian_step(&x)).unwrap();
        assert!((hess - DMatrix::identity(3, 3)).amax() < 1e-5);
    }

    #[test]
    fn hessian_of_quartic() {
        let g = PowerObjective::new(0.0, 4.0).unwrap();
        let x = dvector![2.0];
        let hess = finite_diff_hessian(&g, &x, 1e-3).unwrap();
        assert!((hess[(0, 0)] - 12.0).abs() < 1e-3);
    }

    #[test]
    fn hessian_of_linear() {
        let g = Affine { slope: dvector![1.0, -3.0], offset: 0.0 };
        let x = dvector![0.7, 0.2];
        let hess = finite_diff_hessian(&g, &x, default_hessian_step(&x)).unwrap();
        assert!(hess.amax() < 1e-6);
    }
}
