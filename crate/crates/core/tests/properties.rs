use gradflow::flow::exact_flow;
use gradflow::geometry::{convexity_constants, metric_distance, strong_monotonicity_defect};
use gradflow::linalg::operator_norm;
use gradflow::markov::{self, EntropicStructure};
use gradflow::sampling;
use gradflow::spectral::{real_diagonalise, symmetric_sqrt, DEFAULT_TOL};
use gradflow::synthesis::{recover_diagonalisation, synthesize_canonical};
use gradflow::{Diagonalisation, Matrix, MetricContext, Vector};
use proptest::prelude::*;

fn diag_strategy(max_dim: usize) -> impl Strategy<Value = Diagonalisation> {
    (2..=max_dim, any::<u64>()).prop_map(|(d, seed)| {
        let mut rng = sampling::rng(seed);
        sampling::random_diagonalisation(&mut rng, d, 1e3, (-5.0, 5.0), DEFAULT_TOL)
    })
}

fn reversible_strategy() -> impl Strategy<Value = Matrix> {
    (2usize..=6, any::<u64>()).prop_map(|(d, seed)| sampling::random_reversible_generator(&mut sampling::rng(seed), d))
}

fn point(d: usize, seed: u64) -> Vector {
    sampling::unit_ball(&mut sampling::rng(seed), d, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagonalise_synthesize_recover_round_trip(truth in diag_strategy(10)) {
        let a = truth.reconstruct();
        let diag = real_diagonalise(&a, 1e-8).unwrap();
        let gs = synthesize_canonical(&diag).unwrap();
        prop_assert!((&a + gs.k() * gs.b()).norm() <= 1e-8 * a.norm());
        let rec = recover_diagonalisation(&gs, &a, 1e-8).unwrap();
        for (x, y) in rec.f().iter().zip(truth_sorted(&truth).iter()) {
            prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn canonical_k_is_inverse_metric(truth in diag_strategy(8)) {
        let gs = synthesize_canonical(&truth).unwrap();
        let g = MetricContext::new(&truth).metric_tensor();
        let d = truth.dim();
        let cond = truth.condition();
        prop_assert!((gs.k() * g - Matrix::identity(d, d)).norm() <= 1e-12 * cond * cond);
    }

    #[test]
    fn sqrt_is_symmetric_and_squares_back(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = sampling::rng(seed);
        let m = sampling::random_similarity(&mut rng, d, 1e2);
        let k = &m * m.transpose();
        let s = symmetric_sqrt(&k, DEFAULT_TOL).unwrap();
        prop_assert_eq!(&s, &s.transpose());
        prop_assert!((&s * &s - &k).norm() <= 1e-10 * k.norm());
    }

    #[test]
    fn operator_norm_is_submultiplicative(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = sampling::rng(seed);
        let x = sampling::random_similarity(&mut rng, d, 10.0);
        let y = sampling::random_similarity(&mut rng, d, 10.0);
        prop_assert!(operator_norm(&(&x * &y)) <= operator_norm(&x) * operator_norm(&y) * (1.0 + 1e-12));
        prop_assert!(operator_norm(&x) <= x.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn exact_flow_semigroup(truth in diag_strategy(8), s in 0.0f64..1.0, t in 0.0f64..1.0, seed in any::<u64>()) {
        let x0 = point(truth.dim(), seed);
        let two_step = exact_flow(&truth, &exact_flow(&truth, &x0, s).unwrap(), t).unwrap();
        let one_step = exact_flow(&truth, &x0, s + t).unwrap();
        let scale = truth.condition() * (5.0 * (s + t)).exp() * x0.norm();
        prop_assert!((two_step - one_step).norm() <= 1e-12 * scale);
    }

    #[test]
    fn exact_flow_matches_propagator_series(truth in diag_strategy(6), seed in any::<u64>()) {
        // Taylor series of e^{tA} with t small enough for fast convergence.
        let a = truth.reconstruct();
        let t = 0.05 / operator_norm(&a).max(1.0);
        let x0 = point(truth.dim(), seed);
        let mut term = x0.clone();
        let mut sum = x0.clone();
        for k in 1..30 {
            term = &a * term * (t / k as f64);
            sum += &term;
        }
        let y = exact_flow(&truth, &x0, t).unwrap();
        prop_assert!((y - &sum).norm() <= 1e-11 * truth.condition() * x0.norm().max(1.0));
    }

    #[test]
    fn metric_axioms_and_bounds(truth in diag_strategy(8), s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let ctx = MetricContext::new(&truth);
        let d = truth.dim();
        let (x, y, z) = (point(d, s1), point(d, s2), point(d, s3));
        let dxy = metric_distance(&ctx, &x, &y);
        prop_assert_eq!(metric_distance(&ctx, &x, &x), 0.0);
        prop_assert!((dxy - metric_distance(&ctx, &y, &x)).abs() <= 1e-14 * dxy.max(1.0));
        prop_assert!(dxy <= (metric_distance(&ctx, &x, &z) + metric_distance(&ctx, &z, &y)) * (1.0 + 1e-12));
        let e = (&x - &y).norm();
        prop_assert!(dxy <= ctx.norm_v() * e * (1.0 + 1e-12));
        prop_assert!(e <= ctx.norm_v_inv() * dxy * (1.0 + 1e-12));
    }

    #[test]
    fn lambda_routes_agree(truth in diag_strategy(8), top in -3.0f64..3.0) {
        let f = truth.f().add_scalar(top - truth.max_f());
        let shifted = Diagonalisation::from_parts(truth.v().clone(), f, DEFAULT_TOL).unwrap();
        let c = convexity_constants(&shifted);
        prop_assert!((c.lambda - c.lambda_via_transfer).abs() <= 1e-12 * c.lambda.abs().max(1e-300));
        prop_assert!(c.lambda.signum() == (-top).signum() || top == 0.0);
    }

    #[test]
    fn strong_monotonicity_holds(truth in diag_strategy(8), s1 in any::<u64>(), s2 in any::<u64>()) {
        let gs = synthesize_canonical(&truth).unwrap();
        let c = convexity_constants(&truth);
        let d = truth.dim();
        let (defect, scale) = strong_monotonicity_defect(&gs, c.lambda_tilde, &point(d, s1), &point(d, s2));
        prop_assert!(defect <= 1e-12 * scale);
    }

    #[test]
    fn equilibrium_is_fixed(truth in diag_strategy(8), t in 0.0f64..5.0) {
        let gs = synthesize_canonical(&truth).unwrap();
        prop_assert_eq!(gs.gradient(gs.pi()).norm(), 0.0);
        prop_assert_eq!(exact_flow(&truth, gs.pi(), t).unwrap().norm(), 0.0);
    }

    #[test]
    fn log_mean_between_geometric_and_arithmetic(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
        let l = markov::log_mean(a, b).unwrap();
        let slack = 1e-12 * l;
        prop_assert!((a * b).sqrt() <= l + slack);
        prop_assert!(l <= 0.5 * (a + b) + slack);
        prop_assert_eq!(l, markov::log_mean(b, a).unwrap());
    }

    #[test]
    fn entropic_onsager_kernel_is_constants(g in reversible_strategy(), seed in any::<u64>()) {
        let d = g.nrows();
        let g = markov::validate_generator(&g, DEFAULT_TOL).unwrap();
        let es = EntropicStructure::from_generator(&g, DEFAULT_TOL).unwrap();
        let x = sampling::simplex_interior(&mut sampling::rng(seed), d, markov::SIMPLEX_FLOOR);
        let k = markov::entropic_onsager(&es, &x).unwrap();
        let ones = Vector::from_element(d, 1.0);
        prop_assert!((&k * &ones).norm() <= 1e-14 * k.norm());
        prop_assert_eq!(&k, &k.transpose());
        let mut eig: Vec<f64> = k.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        prop_assert!(eig[0] >= -1e-12 * eig[d - 1]);
        prop_assert!(eig[1] > 1e-9 * eig[d - 1]);
    }

    #[test]
    fn reversible_chains_satisfy_entropic_identity(g in reversible_strategy(), seed in any::<u64>()) {
        let g = markov::validate_generator(&g, DEFAULT_TOL).unwrap();
        let es = EntropicStructure::from_generator(&g, DEFAULT_TOL).unwrap();
        let rep = markov::verify_entropic_flow(&g, &es, 20, seed, 1e-9).unwrap();
        prop_assert!(rep.passed, "{}", rep.max_residual);
    }

    #[test]
    fn markov_flow_conserves_mass_and_entropy_decays(g in reversible_strategy(), seed in any::<u64>()) {
        let d = g.nrows();
        let gen = markov::validate_generator(&g, DEFAULT_TOL).unwrap();
        let es = EntropicStructure::from_generator(&gen, DEFAULT_TOL).unwrap();
        let diag = real_diagonalise(&g, DEFAULT_TOL).unwrap();
        let x0 = sampling::simplex_interior(&mut sampling::rng(seed), d, markov::SIMPLEX_FLOOR);
        let mut last = f64::INFINITY;
        for i in 0..=40 {
            let x = exact_flow(&diag, &x0, 0.05 * i as f64).unwrap();
            prop_assert!((x.sum() - 1.0).abs() <= 1e-12);
            prop_assert!(x.min() > 0.0);
            let (h, _) = markov::relative_entropy(&x, es.pi()).unwrap();
            prop_assert!(h <= last + 1e-9);
            last = h;
        }
    }
}

fn truth_sorted(d: &Diagonalisation) -> Vec<f64> {
    let mut f: Vec<f64> = d.f().iter().copied().collect();
    f.sort_by(f64::total_cmp);
    f
}
