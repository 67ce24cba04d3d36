//! Run configuration files (TOML). Every field is optional so that command
//! line flags can fill in or override what the file leaves out.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use dpgd::{GenerateSpec, SolverConfig, StepRule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "dual_precon", alias = "dual-precon")]
    DualPrecon,
    Gd,
    Bregman,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DualPrecon => "dual_precon",
            Method::Gd => "gd",
            Method::Bregman => "bregman",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Fixed,
    Doubling,
    Adaptive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub rule: Option<RuleKind>,
    /// Initial (or fixed) inverse step size.
    pub l0: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol_kgap: Option<f64>,
    pub tol_grad: Option<f64>,
    pub max_grad_evals: Option<u64>,
    pub r_min: Option<i32>,
    pub r_max: Option<i32>,
}

impl SolverSection {
    /// Fields set in `other` replace those in `self`.
    pub fn merge(&mut self, other: &SolverSection) {
        macro_rules! take {
            ($($f:ident),*) => { $(if other.$f.is_some() { self.$f = other.$f; })* };
        }
        take!(rule, l0, max_iters, tol_kgap, tol_grad, max_grad_evals, r_min, r_max);
    }

    pub fn to_config(&self) -> Result<SolverConfig> {
        let l0 = self.l0.unwrap_or(1.0);
        let rule = match self.rule.unwrap_or(RuleKind::Doubling) {
            RuleKind::Fixed => StepRule::Fixed(l0),
            RuleKind::Doubling => StepRule::Doubling(l0),
            RuleKind::Adaptive => StepRule::Adaptive(l0),
        };
        let mut cfg = SolverConfig::new(rule);
        cfg.store_iterates = false;
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.tol_kgap {
            cfg.tol_kgap = v;
        }
        if let Some(v) = self.tol_grad {
            cfg.tol_grad = v;
        }
        cfg.max_grad_evals = self.max_grad_evals;
        cfg.r_bounds = (self.r_min.unwrap_or(cfg.r_bounds.0), self.r_max.unwrap_or(cfg.r_bounds.1));
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CenterKind {
    /// Least-squares solution of `Ax = b`.
    Lsq,
    Zero,
}

/// Mirror map `h(x) = ‖x − c‖^p / p` for the Bregman baseline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSection {
    pub center: Option<CenterKind>,
    /// Explicit center; takes precedence over `center`.
    pub center_point: Option<Vec<f64>>,
    pub p: Option<f64>,
}

impl MirrorSection {
    pub fn merge(&mut self, other: &MirrorSection) {
        if other.center.is_some() {
            self.center = other.center;
            self.center_point = None;
        }
        if other.center_point.is_some() {
            self.center_point = other.center_point.clone();
        }
        if other.p.is_some() {
            self.p = other.p;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Instance file; alternatively `[generate]`.
    pub instance: Option<PathBuf>,
    pub generate: Option<GenerateSpec>,
    pub method: Option<Method>,
    /// Trace CSV path.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub mirror: MirrorSection,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.instance, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn merge(&mut self, flags: &RunConfig) {
        if flags.instance.is_some() {
            self.instance = flags.instance.clone();
            self.generate = None;
        }
        if flags.generate.is_some() {
            self.generate = flags.generate.clone();
        }
        if flags.method.is_some() {
            self.method = flags.method;
        }
        if flags.output.is_some() {
            self.output = flags.output.clone();
        }
        self.solver.merge(&flags.solver);
        self.mirror.merge(&flags.mirror);
    }

    pub fn check(&self) -> Result<()> {
        if self.instance.is_none() && self.generate.is_none() {
            bail!("no problem given: set 'instance' or a [generate] table, or pass --instance");
        }
        if self.instance.is_some() && self.generate.is_some() {
            bail!("set only one of 'instance' and [generate]");
        }
        if self.method != Some(Method::Bregman) && self.mirror != MirrorSection::default() {
            bail!("[mirror] settings only apply to method = \"bregman\"");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg: RunConfig = toml::from_str(
            r#"
            method = "bregman"
            output = "out.csv"
            [generate]
            kind = "pnorm"
            d = 10
            p = 4.0
            seed = 3
            [solver]
            rule = "adaptive"
            l0 = 2.0
            tol_kgap = 1e-9
            [mirror]
            center = "zero"
            p = 3.0
            "#,
        )
        .unwrap();
        cfg.check().unwrap();
        assert_eq!(cfg.method, Some(Method::Bregman));
        let solver = cfg.solver.to_config().unwrap();
        assert_eq!(solver.step_rule, StepRule::Adaptive(2.0));
        assert_eq!(solver.tol_kgap, 1e-9);
        assert_eq!(cfg.generate.unwrap().d, 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("methd = \"gd\"").is_err());
        assert!(toml::from_str::<RunConfig>("[solver]\nstep = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut file: RunConfig = toml::from_str("instance = \"a.json\"\n[solver]\nrule = \"fixed\"\nl0 = 3.0").unwrap();
        let flags = RunConfig {
            solver: SolverSection { l0: Some(5.0), ..Default::default() },
            ..Default::default()
        };
        file.merge(&flags);
        assert_eq!(file.solver.to_config().unwrap().step_rule, StepRule::Fixed(5.0));
    }

    #[test]
    fn missing_problem_and_bad_step_rejected() {
        assert!(RunConfig::default().check().is_err());
        let bad = SolverSection { l0: Some(-1.0), ..Default::default() };
        assert!(bad.to_config().is_err());
        let cfg: RunConfig = toml::from_str("instance = \"a.json\"\nmethod = \"gd\"\n[mirror]\np = 3.0").unwrap();
        assert!(cfg.check().is_err());
    }
}
