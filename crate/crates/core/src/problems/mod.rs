//! Benchmark problems: objective/dual-reference pairs and the instance file
//! format they are loaded from.

pub mod exp_penalty;
pub mod pnorm;
pub mod power1d;
pub mod quadratic;

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{DualReference, Objective};

pub use exp_penalty::{ExpDualReference, ExpPenaltyObjective};
pub use pnorm::{check_full_rank, PNormDualReference, PNormObjective};
pub use power1d::{power1d_problem, PowerDualReference, PowerObjective};
pub use quadratic::{quadratic_problem, QuadraticDualReference, QuadraticObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Pnorm,
    ExpPenalty,
    Quadratic,
    Power1d,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "pnorm" => Ok(Self::Pnorm),
            "exp_penalty" => Ok(Self::ExpPenalty),
            "quadratic" => Ok(Self::Quadratic),
            "power1d" => Ok(Self::Power1d),
            other => Err(Error::InvalidParameter(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// Serialized problem data. Matrices are stored row-major as nested arrays.
///
/// * `pnorm`: `A` is n×d, `b` has n entries, `p ≥ 2`.
/// * `exp_penalty`: constraints `Ax ≤ b`, cost `c`, temperature `tau`;
///   `inradius`/`circumradius` are present for instances where they are
///   known analytically.
/// * `quadratic`: `A` is d×d SPD, `precond` the SPD matrix `P`.
/// * `power1d`: `b` holds the single shift, `p ≥ 2`; `A` is `[[1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precond: Option<Vec<Vec<f64>>>,
    /// Translation applied to a base instance (`b ← b + Az`, `x0 ← x0 + z`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inradius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circumradius: Option<f64>,
    pub seed: u64,
}

/// An objective together with its designed dual reference.
pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub dual: Box<dyn DualReference>,
}

fn to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::DimensionMismatch { expected: nrows, got: rows.len() });
    }
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidParameter(format!(
                "{name} row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ProblemInstance {
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let rows = match self.kind {
            ProblemKind::Quadratic => self.d,
            _ => self.n,
        };
        to_matrix(&self.a, rows, self.d, "A")
    }

    pub fn rhs(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.b)
    }

    pub fn x0(&self) -> Option<DVector<f64>> {
        self.x0.as_ref().map(|v| DVector::from_column_slice(v))
    }

    fn require_p(&self) -> Result<f64> {
        self.p
            .ok_or_else(|| Error::InvalidParameter(format!("{:?} instance needs 'p'", self.kind)))
    }

    pub fn build(&self) -> Result<Problem> {
        match self.kind {
            ProblemKind::Pnorm => {
                let p = self.require_p()?;
                let f = PNormObjective::new(self.matrix()?, self.rhs(), p)?;
                let k = PNormDualReference::new(self.d, p)?;
                Ok(Problem { objective: Box::new(f), dual: Box::new(k) })
            }
            ProblemKind::ExpPenalty => {
                let f = self.exp_penalty_objective()?;
                Ok(Problem { objective: Box::new(f), dual: Box::new(ExpDualReference::new(self.d)) })
            }
            ProblemKind::Quadratic => {
                let precond = self
                    .precond
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("quadratic instance needs 'precond'".into()))?;
                let (f, k) = quadratic_problem(self.matrix()?, self.rhs(), to_matrix(precond, self.d, self.d, "precond")?)?;
                Ok(Problem { objective: Box::new(f), dual: Box::new(k) })
            }
            ProblemKind::Power1d => {
                if self.d != 1 || self.b.len() != 1 {
                    return Err(Error::InvalidParameter("power1d instance must be one-dimensional".into()));
                }
                let (f, k) = power1d_problem(self.b[0], self.require_p()?)?;
                Ok(Problem { objective: Box::new(f), dual: Box::new(k) })
            }
        }
    }

    pub fn pnorm_objective(&self) -> Result<PNormObjective> {
        if self.kind != ProblemKind::Pnorm {
            return Err(Error::InvalidParameter(format!("expected a pnorm instance, got {:?}", self.kind)));
        }
        PNormObjective::new(self.matrix()?, self.rhs(), self.require_p()?)
    }

    pub fn exp_penalty_objective(&self) -> Result<ExpPenaltyObjective> {
        if self.kind != ProblemKind::ExpPenalty {
            return Err(Error::InvalidParameter(format!("expected an exp_penalty instance, got {:?}", self.kind)));
        }
        let tau = self
            .tau
            .ok_or_else(|| Error::InvalidParameter("exp_penalty instance needs 'tau'".into()))?;
        let c = self
            .c
            .as_ref()
            .map(|c| DVector::from_column_slice(c))
            .unwrap_or_else(|| DVector::zeros(self.d));
        ExpPenaltyObjective::new(self.matrix()?, self.rhs(), c, tau)
    }

    /// The instance `(A, b + Az)` started from `x0 + z`, whose iterates are
    /// those of `self` shifted by `z`.
    pub fn translated(&self, z: &DVector<f64>) -> Result<Self> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        let a = self.matrix()?;
        let shifted_b = self.rhs() + &a * z;
        let mut out = self.clone();
        out.b = shifted_b.iter().copied().collect();
        out.x0 = self.x0().map(|x| (x + z).iter().copied().collect());
        let total = match &self.shift {
            Some(s) => DVector::from_column_slice(s) + z,
            None => z.clone(),
        };
        out.shift = Some(total.iter().copied().collect());
        Ok(out)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        serde_json::to_writer(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parameters for [`generate_random_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub kind: ProblemKind,
    pub d: usize,
    /// Rows; defaults to `10 d` for pnorm and is fixed at `2 d` for the box.
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    /// Cost vector for exp_penalty; defaults to `e_1`.
    pub c: Option<Vec<f64>>,
    pub seed: u64,
}

impl GenerateSpec {
    pub fn new(kind: ProblemKind, d: usize, seed: u64) -> Self {
        Self { kind, d, n: None, p: None, tau: None, c: None, seed }
    }
}

pub fn instance_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Deterministic instance generation.
///
/// * pnorm: `A`, `b` and `x0` i.i.d. standard normal, drawn in that order.
/// * exp_penalty: the box `[−1, 1]^d` (`A = [I; −I]`, `b = 1`), inradius 1,
///   circumradius `√d`, `x0 = 0`.
/// * quadratic: `A = GᵀG/d + I` with Jacobi preconditioner `P = diag(A)`.
/// * power1d: Gaussian shift and start.
pub fn generate_random_instance(spec: &GenerateSpec) -> Result<ProblemInstance> {
    let d = spec.d;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let mut rng = instance_rng(spec.seed);
    let base = ProblemInstance {
        kind: spec.kind,
        p: None,
        tau: None,
        n: 0,
        d,
        a: Vec::new(),
        b: Vec::new(),
        c: None,
        precond: None,
        shift: None,
        x0: None,
        inradius: None,
        circumradius: None,
        seed: spec.seed,
    };
    match spec.kind {
        ProblemKind::Pnorm => {
            let n = spec.n.unwrap_or(10 * d);
            if n == 0 {
                return Err(Error::InvalidParameter("row count must be positive".into()));
            }
            let p = spec.p.unwrap_or(4.0);
            if !(p >= 2.0) {
                return Err(Error::InvalidParameter(format!("p-norm regression needs p >= 2, got {p}")));
            }
            let a: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vec(&mut rng, d)).collect();
            let b = gaussian_vec(&mut rng, n);
            let x0 = gaussian_vec(&mut rng, d);
            Ok(ProblemInstance { p: Some(p), n, a, b, x0: Some(x0), ..base })
        }
        ProblemKind::ExpPenalty => {
            if let Some(n) = spec.n {
                if n != 2 * d {
                    return Err(Error::InvalidParameter(format!("box instance has n = 2d = {}, got {n}", 2 * d)));
                }
            }
            let tau = spec.tau.unwrap_or(1.0);
            if !(tau > 0.0) {
                return Err(Error::InvalidParameter(format!("temperature must be positive, got {tau}")));
            }
            let c = match &spec.c {
                Some(c) if c.len() != d => {
                    return Err(Error::DimensionMismatch { expected: d, got: c.len() })
                }
                Some(c) => c.clone(),
                None => {
                    let mut e1 = vec![0.0; d];
                    e1[0] = 1.0;
                    e1
                }
            };
            let mut a = Vec::with_capacity(2 * d);
            for sign in [1.0, -1.0] {
                for j in 0..d {
                    let mut row = vec![0.0; d];
                    row[j] = sign;
                    a.push(row);
                }
            }
            Ok(ProblemInstance {
                tau: Some(tau),
                n: 2 * d,
                a,
                b: vec![1.0; 2 * d],
                c: Some(c),
                x0: Some(vec![0.0; d]),
                inradius: Some(1.0),
                circumradius: Some((d as f64).sqrt()),
                ..base
            })
        }
        ProblemKind::Quadratic => {
            let g = DMatrix::from_row_slice(d, d, &gaussian_vec(&mut rng, d * d));
            let a = g.tr_mul(&g) / d as f64 + DMatrix::identity(d, d);
            let a = (&a + a.transpose()) * 0.5;
            let precond = DMatrix::from_diagonal(&a.diagonal());
            let b = gaussian_vec(&mut rng, d);
            let x0 = gaussian_vec(&mut rng, d);
            Ok(ProblemInstance {
                n: d,
                a: from_matrix(&a),
                b,
                precond: Some(from_matrix(&precond)),
                x0: Some(x0),
                ..base
            })
        }
        ProblemKind::Power1d => {
            if d != 1 {
                return Err(Error::InvalidParameter("power1d is one-dimensional".into()));
            }
            let p = spec.p.unwrap_or(4.0);
            PowerObjective::new(0.0, p)?;
            let shift: f64 = StandardNormal.sample(&mut rng);
            let offset: f64 = StandardNormal.sample(&mut rng);
            Ok(ProblemInstance {
                p: Some(p),
                n: 1,
                a: vec![vec![1.0]],
                b: vec![shift],
                x0: Some(vec![shift + 3.0 * offset]),
                ..base
            })
        }
    }
}

/// A one-dimensional power instance with explicit shift and start.
pub fn power1d_instance(shift: f64, p: f64, x0: f64) -> ProblemInstance {
    ProblemInstance {
        kind: ProblemKind::Power1d,
        p: Some(p),
        tau: None,
        n: 1,
        d: 1,
        a: vec![vec![1.0]],
        b: vec![shift],
        c: None,
        precond: None,
        shift: None,
        x0: Some(vec![x0]),
        inradius: None,
        circumradius: None,
        seed: 0,
    }
}
