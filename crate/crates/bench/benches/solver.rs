use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dpgd::certify::{sample_bregman_ratio, LogRadialSampler};
use dpgd::{generate_random_instance, solve, GenerateSpec, ProblemKind, SolverConfig, StepRule};

fn pnorm_problem(d: usize, n: usize) -> dpgd::ProblemInstance {
    let mut spec = GenerateSpec::new(ProblemKind::Pnorm, d, 1);
    spec.n = Some(n);
    spec.p = Some(4.0);
    generate_random_instance(&spec).unwrap()
}

fn gradient(c: &mut Criterion) {
    let inst = pnorm_problem(100, 1000);
    let problem = inst.build().unwrap();
    let x = inst.x0().unwrap();
    c.bench_function("pnorm_gradient_d100_n1000", |b| b.iter(|| problem.objective.gradient(black_box(&x))));
    let g = problem.objective.gradient(&x);
    c.bench_function("pnorm_dual_gradient_d100", |b| b.iter(|| problem.dual.gradient(black_box(&g))));
}

fn solver(c: &mut Criterion) {
    let inst = pnorm_problem(100, 1000);
    let problem = inst.build().unwrap();
    let x0 = inst.x0().unwrap();
    let mut group = c.benchmark_group("solve_pnorm_d100_n1000");
    group.sample_size(10);
    for (name, rule) in [("doubling", StepRule::Doubling(1.0)), ("adaptive", StepRule::Adaptive(1.0))] {
        let mut cfg = SolverConfig::new(rule);
        cfg.tol_kgap = 1e-10;
        cfg.store_iterates = false;
        group.bench_function(name, |b| {
            b.iter(|| solve(problem.objective.as_ref(), problem.dual.as_ref(), &x0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn certify_sampling(c: &mut Criterion) {
    let inst = pnorm_problem(20, 200);
    let problem = inst.build().unwrap();
    let x0 = inst.x0().unwrap();
    c.bench_function("bregman_ratio_200_pairs_d20", |b| {
        b.iter(|| {
            let mut sampler = LogRadialSampler::new(x0.clone(), 7);
            sample_bregman_ratio(problem.objective.as_ref(), problem.dual.as_ref(), &mut sampler, 200)
        })
    });
}

criterion_group!(benches, gradient, solver, certify_sampling);
criterion_main!(benches);
