//! Dual space preconditioned gradient descent
//! `x_{i+1} = x_i − (1/L*_i) ∇k(∇f(x_i))` with fixed, doubling and adaptive
//! inverse step sizes.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{DualReference, Objective};

/// Inverse step size policy. The payload is the (initial) `L*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant `L*`.
    Fixed(f64),
    /// Start from `L*₀`; double while the candidate step increases `f` or
    /// leaves the domain. Never decreased.
    Doubling(f64),
    /// Smallest power of two (searched from the previous value) for which
    /// the candidate stays in the domain, does not increase `k(∇f)`, and
    /// satisfies `k(∇f(x⁺)) − k(0) ≤ L*_i (f(x) − f(x⁺))`.
    Adaptive(f64),
}

impl StepRule {
    pub fn initial(&self) -> f64 {
        match *self {
            StepRule::Fixed(l) | StepRule::Doubling(l) | StepRule::Adaptive(l) => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step_rule: StepRule,
    pub max_iters: usize,
    /// Stop once `k(∇f(x_i)) − k(0) ≤ tol_kgap`.
    pub tol_kgap: f64,
    /// Stop once `‖∇f(x_i)‖ ≤ tol_grad`; disabled at 0.
    pub tol_grad: f64,
    /// Exponent range for the `2^r` step search.
    pub r_bounds: (i32, i32),
    /// Gradient evaluation budget; reaching it ends the run as `MaxIters`.
    #[serde(default)]
    pub max_grad_evals: Option<u64>,
    pub store_iterates: bool,
}

impl SolverConfig {
    pub fn new(step_rule: StepRule) -> Self {
        Self {
            step_rule,
            max_iters: 10_000,
            tol_kgap: 1e-12,
            tol_grad: 0.0,
            r_bounds: (-60, 60),
            max_grad_evals: None,
            store_iterates: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.step_rule.initial();
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("inverse step size must be positive, got {l}")));
        }
        if self.r_bounds.0 > self.r_bounds.1 {
            return Err(Error::InvalidParameter(format!("empty exponent range {:?}", self.r_bounds)));
        }
        if !(self.tol_kgap >= 0.0) || !(self.tol_grad >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    KgapTol,
    GradTol,
    MaxIters,
    StepSearchExhausted,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::KgapTol | Termination::GradTol)
    }
}

/// One row of a run. `step_inv` is the inverse step size `L*_i` used to
/// move from `x_i` to `x_{i+1}`; on the final row, where no step is taken,
/// it is the value the next step would start from.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub x: Option<DVector<f64>>,
    pub f_val: f64,
    pub k_gap: f64,
    pub grad_norm: f64,
    pub step_inv: f64,
    pub grad_evals: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// All gradient evaluations, including those of a failed final search.
    pub total_grad_evals: u64,
}

impl IterateTrace {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("a trace has at least one record")
    }

    pub fn final_x(&self) -> Option<&DVector<f64>> {
        self.last().x.as_ref()
    }

    pub fn grad_evals(&self) -> u64 {
        self.total_grad_evals
    }

    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    /// Smallest recorded objective value.
    pub fn best_value(&self) -> f64 {
        self.records.iter().map(|r| r.f_val).fold(f64::INFINITY, f64::min)
    }

    /// Gradient evaluations spent when `k_gap` first dropped to `tol`.
    pub fn evals_to_kgap(&self, tol: f64) -> Option<u64> {
        self.records.iter().find(|r| r.k_gap <= tol).map(|r| r.grad_evals)
    }
}

/// `x − (1/L*) ∇k(∇f(x))`. Returns `x` itself when `∇f(x) = 0`.
pub fn dual_precon_step<F, K>(f: &F, k: &K, x: &DVector<f64>, step_inv: f64) -> DVector<f64>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
{
    x - k.gradient(&f.gradient(x)) / step_inv
}

/// Rounding allowance for a value change measured against a value `v`.
pub(crate) fn value_slack(v: f64) -> f64 {
    4.0 * f64::EPSILON * (1.0 + v.abs())
}

struct Point {
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
    k: f64,
}

fn evaluate<F, K>(f: &F, k: &K, x: DVector<f64>, iter: usize, evals: &mut u64) -> Result<Point>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
{
    let fx = f.value(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite { what: "objective value", iter });
    }
    let g = f.gradient(&x);
    *evals += 1;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "gradient", iter });
    }
    let kv = k.value(&g);
    if !kv.is_finite() {
        return Err(Error::NonFinite { what: "dual reference value", iter });
    }
    Ok(Point { x, f: fx, g, k: kv })
}

/// Runs the method from `x0` until a tolerance, the iteration cap, or a
/// failed step search.
pub fn solve<F, K>(f: &F, k: &K, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<IterateTrace>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
{
    cfg.validate()?;
    if k.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: k.dim() });
    }
    f.check_domain(x0)?;
    let start = Instant::now();
    let k0 = k.min_value();
    let (r_min, r_max) = cfg.r_bounds;
    let l_cap = 2f64.powi(r_max);

    let mut evals = 0u64;
    let mut cur = evaluate(f, k, x0.clone(), 0, &mut evals)?;
    // Evaluations spent up to and including the current point.
    let mut cur_evals = evals;
    let mut step_inv = match cfg.step_rule {
        StepRule::Adaptive(l) => 2f64.powi((l.log2().round() as i32).clamp(r_min, r_max)),
        rule => rule.initial(),
    };
    let mut records = Vec::new();

    for iter in 0.. {
        let k_gap = cur.k - k0;
        let grad_norm = cur.g.norm();
        let record = |records: &mut Vec<IterRecord>, x: &DVector<f64>, l: f64| {
            records.push(IterRecord {
                iter,
                x: cfg.store_iterates.then(|| x.clone()),
                f_val: cur.f,
                k_gap,
                grad_norm,
                step_inv: l,
                grad_evals: cur_evals,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        };

        let stop = if k_gap <= cfg.tol_kgap {
            Some(Termination::KgapTol)
        } else if cfg.tol_grad > 0.0 && grad_norm <= cfg.tol_grad {
            Some(Termination::GradTol)
        } else if iter >= cfg.max_iters || cfg.max_grad_evals.is_some_and(|b| evals >= b) {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if let Some(termination) = stop {
            record(&mut records, &cur.x, step_inv);
            return Ok(IterateTrace { records, termination, total_grad_evals: evals });
        }

        let direction = k.gradient(&cur.g);
        let next = match cfg.step_rule {
            StepRule::Fixed(l) => {
                let x = &cur.x - &direction / l;
                f.check_domain(&x)?;
                Some(evaluate(f, k, x, iter + 1, &mut evals)?)
            }
            StepRule::Doubling(_) => {
                let mut accepted = None;
                while step_inv <= l_cap {
                    let x = &cur.x - &direction / step_inv;
                    if f.in_domain(&x) {
                        let change = f.value_change(&cur.x, &x);
                        if change.is_finite() && change <= value_slack(cur.f) {
                            accepted = Some(x);
                            break;
                        }
                    }
                    step_inv *= 2.0;
                }
                match accepted {
                    Some(x) => Some(evaluate(f, k, x, iter + 1, &mut evals)?),
                    None => None,
                }
            }
            StepRule::Adaptive(_) => {
                let search = AdaptiveSearch { f, k, cur: &cur, direction: &direction, k0, iter };
                let r0 = step_inv.log2().round() as i32;
                match search.run(r0, r_min, r_max, &mut evals)? {
                    Some((r, point)) => {
                        step_inv = 2f64.powi(r);
                        Some(point)
                    }
                    None => None,
                }
            }
        };

        match next {
            Some(point) => {
                record(&mut records, &cur.x, step_inv);
                cur = point;
                cur_evals = evals;
            }
            None => {
                record(&mut records, &cur.x, step_inv.min(l_cap));
                return Ok(IterateTrace {
                    records,
                    termination: Termination::StepSearchExhausted,
                    total_grad_evals: evals,
                });
            }
        }
    }
    unreachable!("the iteration loop only exits by returning")
}

struct AdaptiveSearch<'a, F: ?Sized, K: ?Sized> {
    f: &'a F,
    k: &'a K,
    cur: &'a Point,
    direction: &'a DVector<f64>,
    k0: f64,
    iter: usize,
}

impl<F, K> AdaptiveSearch<'_, F, K>
where
    F: Objective + ?Sized,
    K: DualReference + ?Sized,
{
    /// Candidate for `L* = 2^r` if it satisfies all three step conditions.
    fn trial(&self, r: i32, evals: &mut u64) -> Result<Option<Point>> {
        let x = &self.cur.x - self.direction / 2f64.powi(r);
        if !self.f.in_domain(&x) {
            return Ok(None);
        }
        let point = match evaluate(self.f, self.k, x, self.iter + 1, evals) {
            Ok(p) => p,
            Err(Error::NonFinite { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let gap = self.cur.k - self.k0;
        let slack = 1e-12 * (1.0 + gap.abs());
        let no_increase = point.k <= self.cur.k + slack;
        let decrease = -self.f.value_change(&self.cur.x, &point.x);
        let sufficient = point.k - self.k0 <= 2f64.powi(r) * decrease + slack;
        Ok((no_increase && sufficient).then_some(point))
    }

    /// Halves from `r0` while the conditions hold, or doubles until they do.
    fn run(&self, r0: i32, r_min: i32, r_max: i32, evals: &mut u64) -> Result<Option<(i32, Point)>> {
        match self.trial(r0, evals)? {
            Some(mut best) => {
                let mut r = r0;
                while r > r_min {
                    match self.trial(r - 1, evals)? {
                        Some(p) => {
                            best = p;
                            r -= 1;
                        }
                        None => break,
                    }
                }
                Ok(Some((r, best)))
            }
            None => {
                let mut r = r0;
                while r < r_max {
                    r += 1;
                    if let Some(p) = self.trial(r, evals)? {
                        return Ok(Some((r, p)));
                    }
                }
                Ok(None)
            }
        }
    }
}

/// Outcome of checking a trace against the convergence guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `k_gap(i) ≤ (max_{j<i} L*_j / i)(f(x0) − f_min)` at every `i ≥ 1`.
    pub sublinear_holds: bool,
    /// Smallest `bound − k_gap` over the trace.
    pub worst_sublinear_margin: f64,
    pub worst_sublinear_iter: usize,
    /// `f(x_i) − f_min ≤ Π_{j<i}(1 − μ*/L*_j)(f(x0) − f_min)`, when `μ*` is
    /// supplied.
    pub linear_holds: Option<bool>,
    pub worst_linear_margin: Option<f64>,
    pub checked: usize,
}

/// Checks the sublinear (and, given `μ*`, linear) rate bounds along a
/// recorded run, allowing an absolute slack `tol`.
pub fn verify_rate_bounds(
    trace: &IterateTrace,
    f_min: Option<f64>,
    f0: f64,
    mu_star: Option<f64>,
    tol: f64,
) -> Result<RateReport> {
    let f_min = f_min.ok_or_else(|| {
        Error::Unsupported("rate bounds need a reference minimum value f_min".into())
    })?;
    let gap0 = f0 - f_min;
    let mut worst_sub = f64::INFINITY;
    let mut worst_sub_iter = 0;
    let mut max_l = f64::NEG_INFINITY;
    for (i, rec) in trace.records.iter().enumerate().skip(1) {
        max_l = max_l.max(trace.records[i - 1].step_inv);
        let bound = max_l / i as f64 * gap0;
        let margin = bound - rec.k_gap;
        if margin < worst_sub {
            worst_sub = margin;
            worst_sub_iter = i;
        }
    }

    let (linear_holds, worst_linear_margin) = match mu_star {
        Some(mu) => {
            let mut factor = 1.0;
            let mut worst = f64::INFINITY;
            for (i, rec) in trace.records.iter().enumerate() {
                if i > 0 {
                    factor *= 1.0 - mu / trace.records[i - 1].step_inv;
                }
                let margin = factor * gap0 - (rec.f_val - f_min);
                worst = worst.min(margin);
            }
            (Some(worst >= -tol), Some(worst))
        }
        None => (None, None),
    };

    Ok(RateReport {
        sublinear_holds: worst_sub >= -tol,
        worst_sublinear_margin: worst_sub,
        worst_sublinear_iter: worst_sub_iter,
        linear_holds,
        worst_linear_margin,
        checked: trace.records.len().saturating_sub(1),
    })
}
