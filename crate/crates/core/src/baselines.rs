//! Reference first-order methods: gradient descent and the Bregman gradient
//! (mirror descent) method with a closed-form mirror map.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::func::{check_dim, DualReference, HalfSquaredNorm, Objective, SmoothFunction};
use crate::solver::{value_slack, IterRecord, IterateTrace, SolverConfig, StepRule, Termination};

/// Strictly convex reference `h` whose gradient map can be inverted in
/// closed form.
pub trait MirrorMap: SmoothFunction {
    /// `∇h*`; `None` outside its domain.
    fn conjugate_gradient(&self, y: &DVector<f64>) -> Option<DVector<f64>>;
}

impl MirrorMap for HalfSquaredNorm {
    fn conjugate_gradient(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        Some(y.clone())
    }
}

/// `h(x) = ‖x − c‖^p / p`, with `∇h*(y) = c + ‖y‖^{(2−p)/(p−1)} y`.
#[derive(Debug, Clone)]
pub struct PowerMirrorMap {
    center: DVector<f64>,
    p: f64,
}

impl PowerMirrorMap {
    pub fn new(center: DVector<f64>, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("mirror map power must exceed 1, got {p}")));
        }
        Ok(Self { center, p })
    }
}

impl SmoothFunction for PowerMirrorMap {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (x - &self.center).norm().powf(self.p) / self.p
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = x - &self.center;
        let r = u.norm();
        if r == 0.0 {
            return u;
        }
        u * r.powf(self.p - 2.0)
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), x)
    }
}

impl MirrorMap for PowerMirrorMap {
    fn conjugate_gradient(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let t = y.norm();
        if !t.is_finite() || y.len() != self.center.len() {
            return None;
        }
        if t == 0.0 {
            return Some(self.center.clone());
        }
        let e = (2.0 - self.p) / (self.p - 1.0);
        Some(&self.center + y * t.powf(e))
    }
}

/// `x − (1/L)∇f(x)`.
pub fn gd_step<F: Objective + ?Sized>(f: &F, x: &DVector<f64>, step_inv: f64) -> DVector<f64> {
    x - f.gradient(x) / step_inv
}

/// `∇h*(∇h(x) − (1/L)∇f(x))`.
pub fn bregman_step<F, H>(f: &F, h: &H, x: &DVector<f64>, step_inv: f64) -> Result<DVector<f64>>
where
    F: Objective + ?Sized,
    H: MirrorMap + ?Sized,
{
    let y = h.gradient(x) - f.gradient(x) / step_inv;
    h.conjugate_gradient(&y)
        .ok_or_else(|| Error::Domain("mirror step left the domain of the conjugate gradient".into()))
}

/// Runs gradient descent, reporting `k(∇f) − k(0)` against `monitor` so
/// traces are comparable with the dual preconditioned method.
pub fn run_gradient_descent<F, K>(f: &F, monitor: &K, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<IterateTrace>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
{
    run_baseline(f, monitor, x0, cfg, |x, g, l| Ok(x - g / l))
}

pub fn run_bregman<F, H, K>(
    f: &F,
    h: &H,
    monitor: &K,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<IterateTrace>
where
    F: Objective + ?Sized,
    H: MirrorMap + ?Sized,
    K: DualReference + ?Sized,
{
    if h.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: h.dim() });
    }
    run_baseline(f, monitor, x0, cfg, |x, g, l| {
        let y = h.gradient(x) - g / l;
        h.conjugate_gradient(&y)
            .ok_or_else(|| Error::Domain("mirror step left the domain of the conjugate gradient".into()))
    })
}

/// Shared driver for fixed and doubling step rules.
fn run_baseline<F, K, U>(f: &F, monitor: &K, x0: &DVector<f64>, cfg: &SolverConfig, update: U) -> Result<IterateTrace>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
    U: Fn(&DVector<f64>, &DVector<f64>, f64) -> Result<DVector<f64>>,
{
    cfg.validate()?;
    let doubling = match cfg.step_rule {
        StepRule::Fixed(_) => false,
        StepRule::Doubling(_) => true,
        StepRule::Adaptive(_) => {
            return Err(Error::Unsupported("baselines support fixed and doubling step rules only".into()))
        }
    };
    f.check_domain(x0)?;
    let start = Instant::now();
    let k0 = monitor.min_value();
    let l_cap = 2f64.powi(cfg.r_bounds.1);
    let mut step_inv = cfg.step_rule.initial();
    let mut x = x0.clone();
    let mut fx = f.value(&x);
    let mut evals = 0u64;
    let mut records = Vec::new();

    for iter in 0.. {
        if !fx.is_finite() {
            return Err(Error::NonFinite { what: "objective value", iter });
        }
        let g = f.gradient(&x);
        evals += 1;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", iter });
        }
        let k_gap = monitor.value(&g) - k0;
        let grad_norm = g.norm();
        let stop = if k_gap <= cfg.tol_kgap {
            Some(Termination::KgapTol)
        } else if cfg.tol_grad > 0.0 && grad_norm <= cfg.tol_grad {
            Some(Termination::GradTol)
        } else if iter >= cfg.max_iters || cfg.max_grad_evals.is_some_and(|b| evals >= b) {
            Some(Termination::MaxIters)
        } else {
            None
        };

        let mut next = None;
        if stop.is_none() {
            loop {
                if step_inv > l_cap {
                    break;
                }
                let candidate = match update(&x, &g, step_inv) {
                    Ok(c) => Some(c),
                    Err(Error::Domain(_)) if doubling => None,
                    Err(e) => return Err(e),
                };
                if let Some(c) = candidate.filter(|c| f.in_domain(c)) {
                    let fc = f.value(&c);
                    let accept = !doubling || {
                        let change = f.value_change(&x, &c);
                        fc.is_finite() && change.is_finite() && change <= value_slack(fx)
                    };
                    if accept {
                        next = Some((c, fc));
                        break;
                    }
                } else if !doubling {
                    return Err(Error::Domain(format!("step {iter} left the domain")));
                }
                step_inv *= 2.0;
            }
        }

        records.push(IterRecord {
            iter,
            x: cfg.store_iterates.then(|| x.clone()),
            f_val: fx,
            k_gap,
            grad_norm,
            step_inv: step_inv.min(l_cap),
            grad_evals: evals,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if let Some(termination) = stop {
            return Ok(IterateTrace { records, termination, total_grad_evals: evals });
        }
        match next {
            Some((c, fc)) => {
                x = c;
                fx = fc;
            }
            None => {
                return Ok(IterateTrace {
                    records,
                    termination: Termination::StepSearchExhausted,
                    total_grad_evals: evals,
                })
            }
        }
    }
    unreachable!("the iteration loop only exits by returning")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::power1d::PowerObjective;
    use nalgebra::dvector;

    #[test]
    fn gd_examples() {
        let f = HalfSquaredNorm::new(2);
        assert_eq!(gd_step(&f, &dvector![3.0, 4.0], 1.0), dvector![0.0, 0.0]);
        let quartic = PowerObjective::new(0.0, 4.0).unwrap();
        assert_eq!(gd_step(&quartic, &dvector![2.0], 1.0), dvector![-6.0]);
        let stationary = dvector![0.0];
        assert_eq!(gd_step(&quartic, &stationary, 1.0), stationary);
    }

    #[test]
    fn euclidean_mirror_map_is_gradient_descent_bitwise() {
        let f = PowerObjective::new(0.3, 3.0).unwrap();
        let h = HalfSquaredNorm::new(1);
        for &x in &[-2.0, 0.1, 1.7, 40.0] {
            let x = dvector![x];
            let a = gd_step(&f, &x, 3.0);
            let b = bregman_step(&f, &h, &x, 3.0).unwrap();
            assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }

    #[test]
    fn matched_mirror_map_one_step() {
        let f = PowerObjective::new(1.0, 4.0).unwrap();
        let h = PowerMirrorMap::new(dvector![1.0], 4.0).unwrap();
        let x1 = bregman_step(&f, &h, &dvector![3.0], 1.0).unwrap();
        assert!((x1[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quartic_mirror_map_example() {
        let f = HalfSquaredNorm::new(1);
        let h = PowerMirrorMap::new(dvector![0.0], 4.0).unwrap();
        let x1 = bregman_step(&f, &h, &dvector![2.0], 1.0).unwrap();
        assert!((x1[0] - 6f64.cbrt()).abs() < 1e-14);
        assert!((x1[0] - 1.8171).abs() < 1e-4);
    }

    #[test]
    fn power_mirror_inversion() {
        let h = PowerMirrorMap::new(dvector![0.5, -1.0, 2.0], 3.5).unwrap();
        for x in [dvector![1.0, 2.0, 3.0], dvector![-4.0, 0.1, 2.0], dvector![0.5, -1.0, 2.001]] {
            let back = h.conjugate_gradient(&h.gradient(&x)).unwrap();
            assert!((&back - &x).norm() <= 1e-8 * x.norm());
        }
        assert_eq!(h.conjugate_gradient(&DVector::zeros(3)).unwrap(), dvector![0.5, -1.0, 2.0]);
    }

    #[test]
    fn adaptive_rule_is_rejected() {
        let f = HalfSquaredNorm::new(1);
        let cfg = SolverConfig::new(StepRule::Adaptive(1.0));
        assert!(matches!(run_gradient_descent(&f, &f, &dvector![1.0], &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn doubling_gd_converges_on_quartic() {
        let f = PowerObjective::new(0.5, 4.0).unwrap();
        let mut cfg = SolverConfig::new(StepRule::Doubling(1.0));
        cfg.max_iters = 200_000;
        cfg.tol_kgap = 1e-8;
        let monitor = HalfSquaredNorm::new(1);
        let trace = run_gradient_descent(&f, &monitor, &dvector![3.0], &cfg).unwrap();
        assert!(trace.termination.converged());
        for w in trace.records.windows(2) {
            assert!(w[1].f_val <= w[0].f_val + value_slack(w[0].f_val));
        }
    }
}
