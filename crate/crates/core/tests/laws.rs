use erepr::bell::{exact_chsh, exact_correlation, CHSHConfig, TSIRELSON_BOUND};
use erepr::instruments::{
    apply_instrument, coarse_grain, validate_instrument, CoarseGrainingPartition, Violation,
};
use erepr::linalg::{
    evolve, partial_trace, purity, tensor_product, trace_distance, ComplexMatrix, SubsystemLayout,
    Tolerances,
};
use erepr::random::{
    random_density, random_hermitian, random_instrument, rescale_branch, sign_flip_term,
};
use erepr::worlds::{pair_layout, singlet_pair, BoundaryPair};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn layout(labels: &[&str]) -> SubsystemLayout {
    SubsystemLayout::qubits(labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_inverts_tensor_product(seed: u64) {
        let mut r = rng(seed);
        let a = random_density(&mut r, &layout(&["a"]));
        let b = random_density(&mut r, &layout(&["b", "c"]));
        let ab = tensor_product(&a, &b).unwrap();
        let back_a = partial_trace(&ab, &["a"]).unwrap();
        let back_b = partial_trace(&ab, &["b", "c"]).unwrap();
        prop_assert!(back_a.matrix().max_abs_diff(a.matrix()) < 1e-13);
        prop_assert!(back_b.matrix().max_abs_diff(b.matrix()) < 1e-13);
        prop_assert!((purity(&ab) - purity(&a) * purity(&b)).abs() < 1e-13);
    }

    #[test]
    fn partial_trace_keeps_a_state(seed: u64) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, &layout(&["a", "b", "c"]));
        for keep in [&["a"][..], &["b"], &["a", "c"], &["c", "a"]] {
            let red = partial_trace(&rho, keep).unwrap();
            prop_assert!((red.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert!(red.check(&Tolerances::default()).is_ok());
            let p = purity(&red);
            prop_assert!(p <= 1.0 + 1e-12 && p >= 1.0 / red.dim() as f64 - 1e-12);
        }
    }

    #[test]
    fn trace_distance_is_a_metric(seed: u64) {
        let mut r = rng(seed);
        let l = layout(&["a", "b"]);
        let (x, y, z) = (random_density(&mut r, &l), random_density(&mut r, &l), random_density(&mut r, &l));
        let dxy = trace_distance(&x, &y).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dxy));
        prop_assert!(trace_distance(&x, &x).unwrap() < 1e-12);
        prop_assert!((dxy - trace_distance(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&x, &z).unwrap() <= dxy + trace_distance(&y, &z).unwrap() + 1e-12);
    }

    #[test]
    fn unitary_evolution_preserves_spectrum(seed: u64, t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let l = layout(&["a", "b"]);
        let rho = random_density(&mut r, &l);
        let h = random_hermitian(&mut r, &l);
        let u = h.propagator(t);
        let uu = &u.adjoint() * &u;
        prop_assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let out = evolve(&rho, &h, t).unwrap();
        let (a, b) = (rho.matrix().hermitian_eigenvalues(), out.matrix().hermitian_eigenvalues());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn instrument_probabilities_are_normalized(seed: u64, dim in 2usize..4, outcomes in 1usize..5, kraus in 1usize..3) {
        let mut r = rng(seed);
        let inst = random_instrument(&mut r, dim, outcomes, kraus);
        prop_assert!(validate_instrument(&inst).is_pass());
        let l = SubsystemLayout::new([("x", dim)]).unwrap();
        let rho = random_density(&mut r, &l);
        let recs = apply_instrument(&inst, &rho, &["x"]).unwrap();
        let total: f64 = recs.iter().map(|r| r.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for rec in recs {
            prop_assert!(rec.probability >= -1e-12);
            if let Some(post) = rec.post_state {
                prop_assert!(post.check(&Tolerances::default()).is_ok());
            }
        }
    }

    #[test]
    fn coarse_graining_adds_probabilities(seed: u64) {
        let mut r = rng(seed);
        let inst = random_instrument(&mut r, 2, 4, 2);
        let part = CoarseGrainingPartition::new(vec![
            ("lo".into(), vec!["o0".into(), "o3".into()]),
            ("hi".into(), vec!["o1".into(), "o2".into()]),
        ]).unwrap();
        let cg = coarse_grain(&inst, &part).unwrap();
        prop_assert!(validate_instrument(&cg).is_pass());
        let rho = random_density(&mut r, &layout(&["q"]));
        let fine = apply_instrument(&inst, &rho, &["q"]).unwrap();
        let coarse = apply_instrument(&cg, &rho, &["q"]).unwrap();
        prop_assert!((coarse[0].probability - fine[0].probability - fine[3].probability).abs() < 1e-13);
        prop_assert!((coarse[1].probability - fine[1].probability - fine[2].probability).abs() < 1e-13);
    }

    #[test]
    fn constructed_violations_are_caught(seed: u64, branch in 0usize..3, factor in 0.2f64..0.9) {
        let mut r = rng(seed);
        let inst = random_instrument(&mut r, 2, 3, 2);
        let flipped = validate_instrument(&sign_flip_term(&inst, branch, 0));
        let not_cp = flipped.violations.iter().any(|v| matches!(v, Violation::NotCompletelyPositive { .. }));
        prop_assert!(not_cp);
        let scaled = validate_instrument(&rescale_branch(&inst, branch, factor));
        let not_tp = scaled.violations.iter().any(|v| matches!(v, Violation::NotTracePreserving { .. }));
        prop_assert!(not_tp);
    }

    #[test]
    fn chsh_never_exceeds_tsirelson(seed: u64, angles in prop::array::uniform4(-7.0f64..7.0)) {
        let mut r = rng(seed);
        let pair = BoundaryPair { state: random_density(&mut r, &pair_layout()), provenance: "random".into() };
        let cfg = CHSHConfig { a: angles[0], a_prime: angles[1], b: angles[2], b_prime: angles[3], ..CHSHConfig::default() };
        let res = exact_chsh(&pair, &cfg).unwrap();
        prop_assert!(res.s_abs <= TSIRELSON_BOUND + 1e-9);
        prop_assert!(res.correlations.iter().all(|e| e.abs() <= 1.0));
    }

    #[test]
    fn singlet_depends_on_angle_differences(ta in -7.0f64..7.0, tb in -7.0f64..7.0, delta in -7.0f64..7.0) {
        let pair = BoundaryPair { state: singlet_pair(), provenance: "singlet".into() };
        let e = exact_correlation(&pair, ta, tb);
        let shifted = exact_correlation(&pair, ta + delta, tb + delta);
        prop_assert!((e - shifted).abs() < 1e-10);
        let base = exact_chsh(&pair, &CHSHConfig::default()).unwrap().s_abs;
        let d = CHSHConfig::default();
        let rot = CHSHConfig { a: d.a + delta, a_prime: d.a_prime + delta, b: d.b + delta, b_prime: d.b_prime + delta, ..d };
        prop_assert!((exact_chsh(&pair, &rot).unwrap().s_abs - base).abs() < 1e-10);
    }
}

#[test]
fn tsirelson_ceiling_random_search() {
    use rand::Rng;
    let mut r = rng(2024);
    let mut best = 0.0_f64;
    for _ in 0..1000 {
        let pair = BoundaryPair {
            state: random_density(&mut r, &pair_layout()),
            provenance: "random".into(),
        };
        let mut angle = || r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let cfg = CHSHConfig {
            a: angle(),
            a_prime: angle(),
            b: angle(),
            b_prime: angle(),
            ..CHSHConfig::default()
        };
        best = best.max(exact_chsh(&pair, &cfg).unwrap().s_abs);
    }
    assert!(best <= TSIRELSON_BOUND + 1e-9);
}
