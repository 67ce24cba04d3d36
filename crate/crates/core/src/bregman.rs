use nalgebra::DVector;

use crate::error::Result;
use crate::func::SmoothFunction;

/// `D(x, y) = g(x) − g(y) − ⟨∇g(y), x − y⟩`.
///
/// Both points must lie in the domain of `g`. The result is nonnegative for
/// convex `g` up to rounding.
pub fn bregman_divergence<G: SmoothFunction + ?Sized>(
    g: &G,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    g.check_domain(x)?;
    g.check_domain(y)?;
    if x == y {
        return Ok(0.0);
    }
    let grad_y = g.gradient(y);
    Ok(g.value(x) - g.value(y) - grad_y.dot(&(x - y)))
}

/// Rounding allowance for a divergence evaluated at `x`, `y`.
pub fn divergence_scale<G: SmoothFunction + ?Sized>(g: &G, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    1.0 + g.value(x).abs() + g.value(y).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::HalfSquaredNorm;
    use crate::problems::power1d::PowerObjective;
    use nalgebra::dvector;

    #[test]
    fn half_squared_norm_divergence() {
        let g = HalfSquaredNorm::new(2);
        let d = bregman_divergence(&g, &dvector![1.0, 0.0], &dvector![0.0, 0.0]).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn identical_points() {
        let g = PowerObjective::new(1.0, 4.0).unwrap();
        let x = dvector![0.3];
        assert_eq!(bregman_divergence(&g, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn shifted_quartic() {
        // |x-1|^4/4 at x=2, y=0: 1/4 - 1/4 - (-1)(2) = 2
        let g = PowerObjective::new(1.0, 4.0).unwrap();
        let d = bregman_divergence(&g, &dvector![2.0], &dvector![0.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_a_domain_error() {
        let g = HalfSquaredNorm::new(2);
        assert!(bregman_divergence(&g, &dvector![1.0], &dvector![0.0, 0.0]).is_err());
    }
}
