use approx::{assert_abs_diff_eq, assert_relative_eq};
use dpgd::baselines::{MirrorMap, PowerMirrorMap};
use dpgd::bregman::divergence_scale;
use dpgd::certify::{certify_instance, check_second_order, CertifyOptions};
use dpgd::problems::{ExpDualReference, PNormDualReference, PNormObjective, PowerDualReference, PowerObjective};
use dpgd::{
    bregman_divergence, generate_random_instance, DMatrix, DVector, DualReference, GenerateSpec, ProblemInstance,
    ProblemKind, SmoothFunction,
};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0..5.0f64, 3).prop_map(DVector::from_vec)
}

fn pnorm_objective(entries: &[f64], p: f64) -> PNormObjective {
    let a = DMatrix::from_row_slice(4, 3, &entries[..12]);
    let b = DVector::from_column_slice(&entries[12..16]);
    PNormObjective::new(a, b, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bregman_divergences_are_nonnegative(
        entries in prop::collection::vec(-2.0..2.0f64, 16),
        p in 2.0..6.0f64,
        x in vec3(),
        y in vec3(),
    ) {
        let f = pnorm_objective(&entries, p);
        let tol = 1e-12 * divergence_scale(&f, &x, &y);
        prop_assert!(bregman_divergence(&f, &x, &y).unwrap() >= -tol);

        let k = PNormDualReference::new(3, p).unwrap();
        let tol = 1e-12 * divergence_scale(&k, &x, &y);
        prop_assert!(bregman_divergence(&k, &x, &y).unwrap() >= -tol);

        let e = ExpDualReference::new(3);
        let tol = 1e-12 * divergence_scale(&e, &x, &y);
        prop_assert!(bregman_divergence(&e, &x, &y).unwrap() >= -tol);
    }

    #[test]
    fn dual_gradient_maps_invert(y in vec3(), p in 2.0..8.0f64, u in vec3()) {
        let k = PNormDualReference::new(3, p).unwrap();
        let back = k.conjugate_gradient(&k.gradient(&y)).unwrap();
        assert_abs_diff_eq!((back - &y).norm(), 0.0, epsilon = 1e-9 * (1.0 + y.norm()));

        // Points of the open unit ball, the range of the exp reference's gradient.
        let x = &u / (1.0 + u.norm());
        let e = ExpDualReference::new(3);
        let round = e.gradient(&e.conjugate_gradient(&x).unwrap());
        assert_abs_diff_eq!((round - &x).norm(), 0.0, epsilon = 1e-12);

        let h = PowerMirrorMap::new(DVector::from_element(3, 0.5), p).unwrap();
        let back = h.conjugate_gradient(&h.gradient(&y)).unwrap();
        assert_abs_diff_eq!((back - &y).norm(), 0.0, epsilon = 1e-9 * (1.0 + y.norm()));
    }

    #[test]
    fn conjugate_divergence_identity(x in -4.0..4.0f64, y in -4.0..4.0f64, p in 2.0..6.0f64) {
        // D_f(x, y) = D_{f*}(∇f(y), ∇f(x)) for f = |x|^p/p, f* = |s|^q/q.
        prop_assume!(x.abs() > 1e-3 && y.abs() > 1e-3);
        let f = PowerObjective::new(0.0, p).unwrap();
        let k = PowerDualReference::new(p).unwrap();
        let (x, y) = (DVector::from_element(1, x), DVector::from_element(1, y));
        let primal = bregman_divergence(&f, &x, &y).unwrap();
        let dual = bregman_divergence(&k, &f.gradient(&y), &f.gradient(&x)).unwrap();
        assert_relative_eq!(primal, dual, epsilon = 1e-10, max_relative = 1e-8);
    }

    #[test]
    fn instance_json_round_trips(seed in any::<u64>(), kind in 0usize..4, d in 1usize..5) {
        let kinds = [ProblemKind::Pnorm, ProblemKind::ExpPenalty, ProblemKind::Quadratic, ProblemKind::Power1d];
        let kind = kinds[kind];
        let d = if kind == ProblemKind::Power1d { 1 } else { d };
        let mut spec = GenerateSpec::new(kind, d, seed);
        spec.p = Some(3.5);
        let inst = generate_random_instance(&spec).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadratic_hessian_sandwich(seed in any::<u64>(), x in vec3()) {
        let inst = generate_random_instance(&GenerateSpec::new(ProblemKind::Quadratic, 3, seed)).unwrap();
        let opts = CertifyOptions { n_pairs: 50, ..Default::default() };
        let report = certify_instance(&inst, &opts).unwrap();
        let (l, mu) = (report.closed_form_l_star.unwrap(), report.closed_form_mu_star.unwrap());
        let problem = inst.build().unwrap();
        let check = check_second_order(problem.objective.as_ref(), problem.dual.as_ref(), &x, l, mu).unwrap();
        prop_assert!(check.passed, "{check:?}");
    }

    #[test]
    fn box_hessian_upper_bound(x in prop::collection::vec(-0.95..0.95f64, 2)) {
        let mut spec = GenerateSpec::new(ProblemKind::ExpPenalty, 2, 0);
        spec.tau = Some(0.5);
        let inst = generate_random_instance(&spec).unwrap();
        let report = certify_instance(&inst, &CertifyOptions { n_pairs: 50, ..Default::default() }).unwrap();
        let l = report.closed_form_l_star.unwrap();
        let problem = inst.build().unwrap();
        let x = DVector::from_vec(x);
        let check = check_second_order(problem.objective.as_ref(), problem.dual.as_ref(), &x, l, 0.0).unwrap();
        prop_assert!(check.passed, "{check:?}");
    }
}
