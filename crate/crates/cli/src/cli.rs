use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{CenterKind, Method, RuleKind};

/// Experiments with dual space preconditioned gradient descent.
#[derive(Debug, Parser)]
#[command(name = "dpgd", version)]
pub struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "DPGD_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random problem instance.
    Generate(GenerateArgs),
    /// Run one method and write its trace CSV.
    Run(RunArgs),
    /// Certify the dual relative constants of an instance.
    Certify(CertifyArgs),
    /// Race several methods under a shared gradient-evaluation budget.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// pnorm, exp-penalty, quadratic or power1d.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Cost vector for exp-penalty, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<f64>>,
    /// Generate the box [-1, 1]^d (the only exp-penalty geometry offered).
    #[arg(long = "box")]
    pub box_: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    /// Initial (or fixed) inverse step size L*.
    #[arg(long)]
    pub l0: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol_kgap: Option<f64>,
    #[arg(long)]
    pub tol_grad: Option<f64>,
    #[arg(long)]
    pub max_grad_evals: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_max: Option<i32>,
}

#[derive(Debug, Args, Default)]
pub struct MirrorArgs {
    /// Center of the Bregman mirror map ‖x − c‖^p/p.
    #[arg(long, value_enum)]
    pub mirror_center: Option<CenterKind>,
    /// Power of the Bregman mirror map (default: the instance's p, else 2).
    #[arg(long)]
    pub mirror_p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub mirror: MirrorArgs,
    /// Trace CSV path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Sampled point pairs for the Bregman ratio.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Random starts for each sphere or ball extremum (pnorm).
    #[arg(long, default_value_t = 64)]
    pub n_dirs: usize,
    #[arg(long, default_value_t = 60)]
    pub refine_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest row count for which η is enumerated exactly (exp-penalty).
    #[arg(long, default_value_t = 20)]
    pub exact_eta_limit: usize,
    #[arg(long)]
    pub inradius: Option<f64>,
    #[arg(long)]
    pub circumradius: Option<f64>,
    /// Also run the method and check its trace against the rate bounds.
    #[arg(long)]
    pub check_bounds: bool,
    /// Report JSON path.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dual_precon,gd,bregman")]
    pub methods: Vec<Method>,
    /// Gradient evaluations allowed per method.
    #[arg(long, default_value_t = 1000)]
    pub budget: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub mirror: MirrorArgs,
    /// Directory for the per-method traces and summary.csv.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
