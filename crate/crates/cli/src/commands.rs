use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dpgd::baselines::{run_bregman, run_gradient_descent, PowerMirrorMap};
use dpgd::certify::{certify_instance, CertifyOptions, PNormCertifyOptions};
use dpgd::{
    generate_random_instance, solve, verify_rate_bounds, DMatrix, DVector, GenerateSpec, IterateTrace, Problem,
    ProblemInstance, ProblemKind, SolverConfig, StepRule, Termination,
};

use crate::cli::{CertifyArgs, CompareArgs, GenerateArgs, MirrorArgs, RunArgs, SolverArgs};
use crate::config::{CenterKind, Method, MirrorSection, RunConfig, SolverSection};
use crate::trace_csv::write_trace_file;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MAX_ITERS: u8 = 2;
pub const EXIT_STEP_SEARCH: u8 = 3;
pub const EXIT_CERTIFICATE_FAILED: u8 = 4;

pub fn exit_code(termination: Termination) -> u8 {
    match termination {
        Termination::KgapTol | Termination::GradTol => EXIT_OK,
        Termination::MaxIters => EXIT_MAX_ITERS,
        Termination::StepSearchExhausted => EXIT_STEP_SEARCH,
    }
}

fn output_path(explicit: Option<PathBuf>, out_dir: Option<&Path>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| out_dir.unwrap_or(Path::new(".")).join(default_name))
}

fn kind_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Pnorm => "pnorm",
        ProblemKind::ExpPenalty => "exp_penalty",
        ProblemKind::Quadratic => "quadratic",
        ProblemKind::Power1d => "power1d",
    }
}

pub fn generate(args: GenerateArgs, out_dir: Option<&Path>) -> Result<u8> {
    let kind: ProblemKind = args.kind.parse()?;
    if kind == ProblemKind::ExpPenalty && !args.box_ {
        bail!("only box exp-penalty instances can be generated; pass --box");
    }
    if args.box_ && kind != ProblemKind::ExpPenalty {
        bail!("--box only applies to --kind exp-penalty");
    }
    let spec = GenerateSpec {
        kind,
        d: args.d,
        n: args.n,
        p: args.p,
        tau: args.tau,
        c: args.c,
        seed: args.seed,
    };
    let inst = generate_random_instance(&spec)?;
    let path = output_path(
        args.output,
        out_dir,
        &format!("{}_d{}_seed{}.json", kind_name(kind), args.d, args.seed),
    );
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    inst.write_json(&path).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} ({}x{} {})", path.display(), inst.n, inst.d, kind_name(kind));
    Ok(EXIT_OK)
}

fn solver_section(args: &SolverArgs) -> SolverSection {
    SolverSection {
        rule: args.rule,
        l0: args.l0,
        max_iters: args.max_iters,
        tol_kgap: args.tol_kgap,
        tol_grad: args.tol_grad,
        max_grad_evals: args.max_grad_evals,
        r_min: args.r_min,
        r_max: args.r_max,
    }
}

fn mirror_section(args: &MirrorArgs) -> MirrorSection {
    MirrorSection { center: args.mirror_center, center_point: None, p: args.mirror_p }
}

fn load_instance(path: &Path) -> Result<ProblemInstance> {
    ProblemInstance::read_json(path).with_context(|| format!("loading instance {}", path.display()))
}

/// Mirror map for the Bregman baseline. The default center is the
/// least-squares solution of `Ax = b` (zero for exp_penalty), and the
/// default power is the instance's `p` (2 when it has none).
pub fn mirror_map(inst: &ProblemInstance, mirror: &MirrorSection) -> Result<PowerMirrorMap> {
    let p = mirror.p.or(inst.p).unwrap_or(2.0);
    let center = match (&mirror.center_point, mirror.center) {
        (Some(c), _) => {
            if c.len() != inst.d {
                bail!("mirror center has {} entries, instance dimension is {}", c.len(), inst.d);
            }
            DVector::from_column_slice(c)
        }
        (None, Some(CenterKind::Zero)) => DVector::zeros(inst.d),
        (None, Some(CenterKind::Lsq)) => least_squares(inst)?,
        (None, None) if inst.kind == ProblemKind::ExpPenalty => DVector::zeros(inst.d),
        (None, None) => least_squares(inst)?,
    };
    Ok(PowerMirrorMap::new(center, p)?)
}

fn least_squares(inst: &ProblemInstance) -> Result<DVector<f64>> {
    let a: DMatrix<f64> = inst.matrix()?;
    a.svd(true, true)
        .solve(&inst.rhs(), 1e-12)
        .map_err(|e| anyhow::anyhow!("least-squares center: {e}"))
}

pub fn run_method(
    inst: &ProblemInstance,
    problem: &Problem,
    method: Method,
    cfg: &SolverConfig,
    mirror: &MirrorSection,
) -> Result<IterateTrace> {
    let x0 = inst.x0().unwrap_or_else(|| DVector::zeros(inst.d));
    let (f, k) = (problem.objective.as_ref(), problem.dual.as_ref());
    let trace = match method {
        Method::DualPrecon => solve(f, k, &x0, cfg)?,
        Method::Gd => run_gradient_descent(f, k, &x0, cfg)?,
        Method::Bregman => run_bregman(f, &mirror_map(inst, mirror)?, k, &x0, cfg)?,
    };
    Ok(trace)
}

pub fn run(args: RunArgs, out_dir: Option<&Path>) -> Result<u8> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        instance: args.instance.clone(),
        generate: None,
        method: args.method,
        output: args.output.clone(),
        solver: solver_section(&args.solver),
        mirror: mirror_section(&args.mirror),
    };
    cfg.merge(&flags);
    cfg.check()?;
    let method = cfg.method.unwrap_or(Method::DualPrecon);
    let solver = cfg.solver.to_config()?;
    let inst = match (&cfg.instance, &cfg.generate) {
        (Some(path), _) => load_instance(path)?,
        (None, Some(spec)) => generate_random_instance(spec)?,
        (None, None) => unreachable!("checked above"),
    };
    let problem = inst.build()?;
    let trace = run_method(&inst, &problem, method, &solver, &cfg.mirror)?;
    let path = output_path(cfg.output.clone(), out_dir, &format!("trace_{}.csv", method.name()));
    write_trace_file(&path, &trace)?;
    let last = trace.last();
    println!(
        "{}: {:?} after {} iterations, {} gradient evaluations, f = {:.12e}, k_gap = {:.3e}; trace in {}",
        method.name(),
        trace.termination,
        trace.steps(),
        trace.grad_evals(),
        last.f_val,
        last.k_gap,
        path.display()
    );
    Ok(exit_code(trace.termination))
}

pub fn certify(args: CertifyArgs, out_dir: Option<&Path>) -> Result<u8> {
    let inst = load_instance(&args.instance)?;
    let opts = CertifyOptions {
        n_pairs: args.samples,
        seed: args.seed,
        pnorm: PNormCertifyOptions { n_dirs: args.n_dirs, refine_iters: args.refine_iters, seed: args.seed },
        exact_eta_limit: args.exact_eta_limit,
        inradius: args.inradius,
        circumradius: args.circumradius,
    };
    let mut report = certify_instance(&inst, &opts)?;
    let mut ok = report.worst_violation <= 1e-6;

    if args.check_bounds {
        let problem = inst.build()?;
        let (f, k) = (problem.objective.as_ref(), problem.dual.as_ref());
        let x0 = inst.x0().unwrap_or_else(|| DVector::zeros(inst.d));
        let f_min = match f.reference_min() {
            Some((_, v)) => v,
            None => {
                let mut tight = SolverConfig::new(StepRule::Adaptive(1.0));
                tight.tol_kgap = 0.0;
                tight.max_iters = 20_000;
                tight.store_iterates = false;
                solve(f, k, &x0, &tight)?.best_value()
            }
        };
        let mut cfg = SolverConfig::new(StepRule::Adaptive(1.0));
        cfg.store_iterates = false;
        let trace = solve(f, k, &x0, &cfg)?;
        let rate = verify_rate_bounds(&trace, Some(f_min), f.value(&x0), report.closed_form_mu_star, 1e-10)?;
        ok &= rate.sublinear_holds && rate.linear_holds != Some(false);
        report.rate_check = Some(rate);
    }

    let path = output_path(args.output, out_dir, "certificate.json");
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;

    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!("sampled ratio range: [{}, {}] over {} pairs ({} skipped)",
        show(report.mu_star_estimate), show(report.l_star_estimate), report.n_samples, report.n_skipped);
    println!("closed form: mu* = {}, L* = {}", show(report.closed_form_mu_star), show(report.closed_form_l_star));
    if let Some(rate) = &report.rate_check {
        println!(
            "rate bounds over {} iterations: sublinear {} (worst margin {:.3e}), linear {}",
            rate.checked,
            if rate.sublinear_holds { "holds" } else { "VIOLATED" },
            rate.worst_sublinear_margin,
            match rate.linear_holds {
                Some(true) => "holds",
                Some(false) => "VIOLATED",
                None => "not checked",
            }
        );
    }
    println!("report in {}", path.display());
    if !ok {
        eprintln!("certificate check failed (worst violation {:.3e})", report.worst_violation);
        return Ok(EXIT_CERTIFICATE_FAILED);
    }
    Ok(EXIT_OK)
}

pub struct CompareOutcome {
    pub method: Method,
    pub evals_to_tol: Option<u64>,
    pub grad_evals: u64,
    pub final_k_gap: f64,
    pub termination: String,
}

pub fn compare(args: CompareArgs, out_dir: Option<&Path>) -> Result<u8> {
    if args.methods.is_empty() {
        bail!("no methods given");
    }
    let inst = load_instance(&args.instance)?;
    let mut section = solver_section(&args.solver);
    section.max_grad_evals = Some(args.budget);
    let cfg = section.to_config()?;
    // The baselines have no adaptive rule; they double from the same L0.
    let baseline_cfg = match cfg.step_rule {
        StepRule::Adaptive(l0) => SolverConfig { step_rule: StepRule::Doubling(l0), ..cfg.clone() },
        _ => cfg.clone(),
    };
    let tol = cfg.tol_kgap;
    let mirror = mirror_section(&args.mirror);
    let dir = output_path(args.output, out_dir, "compare");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let results: Vec<Result<(Method, IterateTrace)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = args
            .methods
            .iter()
            .map(|&method| {
                let cfg = if method == Method::DualPrecon { &cfg } else { &baseline_cfg };
                let (inst, mirror) = (&inst, &mirror);
                scope.spawn(move || -> Result<(Method, IterateTrace)> {
                    let problem = inst.build()?;
                    Ok((method, run_method(inst, &problem, method, cfg, mirror)?))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("method thread panicked")).collect()
    });

    let mut outcomes = Vec::new();
    for (method, result) in args.methods.iter().zip(results) {
        let outcome = match result {
            Ok((_, trace)) => {
                write_trace_file(&dir.join(format!("{}.csv", method.name())), &trace)?;
                CompareOutcome {
                    method: *method,
                    evals_to_tol: trace.evals_to_kgap(tol),
                    grad_evals: trace.grad_evals(),
                    final_k_gap: trace.last().k_gap,
                    termination: format!("{:?}", trace.termination),
                }
            }
            Err(e) => CompareOutcome {
                method: *method,
                evals_to_tol: None,
                grad_evals: 0,
                final_k_gap: f64::NAN,
                termination: format!("error: {e}"),
            },
        };
        outcomes.push(outcome);
    }

    let summary = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(["method", "evals_to_tol", "grad_evals", "final_k_gap", "termination"])?;
    println!("{:<12} {:>12} {:>10} {:>14}  termination", "method", "evals_to_tol", "evals", "final_k_gap");
    for o in &outcomes {
        let reached = o.evals_to_tol.map_or("DNF".to_string(), |e| e.to_string());
        w.write_record([
            o.method.name().to_string(),
            reached.clone(),
            o.grad_evals.to_string(),
            format!("{:.16e}", o.final_k_gap),
            o.termination.clone(),
        ])?;
        println!("{:<12} {:>12} {:>10} {:>14.6e}  {}", o.method.name(), reached, o.grad_evals, o.final_k_gap, o.termination);
    }
    w.flush()?;
    println!("traces and summary in {}", dir.display());
    Ok(EXIT_OK)
}
