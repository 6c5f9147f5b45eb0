use proptest::prelude::*;
use rand::Rng;

use waybound::conservation::{
    assemble, exp_generator, haar_random_block_unitary, spin_z, BlockUnitary, ConservedPair,
};
use waybound::linops::{commutator_norm, kron_sum, tensor, ComplexMatrix};
use waybound::sampling::{haar_unitary, haar_vector, random_density_matrix};
use waybound::way::{
    charge_identity, charge_identity_purified, check_repeatability, evaluate_tradeoff,
    evaluate_tripartite, MeasurementScheme, DEFAULT_TOL,
};
use waybound::{DensityOperator, PureState, Seed};

/// Integer-spectrum charges, rotated by a random unitary half of the time.
fn random_charge(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let diag: Vec<f64> = (0..d).map(|_| rng.random_range(-2..=2) as f64).collect();
    let l = ComplexMatrix::from_real_diagonal(&diag);
    if rng.random_bool(0.5) {
        haar_unitary(d, rng).conjugate(&l).symmetrized()
    } else {
        l
    }
}

fn orthonormal_pair(d: usize, rng: &mut impl Rng) -> (PureState, PureState) {
    let u = haar_unitary(d, rng);
    (
        PureState::from_amplitudes(u.column(0)).unwrap(),
        PureState::from_amplitudes(u.column(1)).unwrap(),
    )
}

fn random_scheme(seed: u64) -> MeasurementScheme {
    let mut rng = Seed::new(seed).rng();
    let d_s = rng.random_range(2..=3);
    let d_a = rng.random_range(1..=3);
    let cp =
        ConservedPair::new(&random_charge(d_s, &mut rng), &random_charge(d_a, &mut rng)).unwrap();
    let (psi0, psi1) = orthonormal_pair(d_s, &mut rng);
    let rank = rng.random_range(1..=d_a);
    let sigma = DensityOperator::from_matrix(random_density_matrix(d_a, rank, &mut rng)).unwrap();
    let u = assemble(
        &haar_random_block_unitary(&cp, Seed::new(seed).derive(1)),
        &cp,
    )
    .unwrap();
    MeasurementScheme::new(psi0, psi1, sigma, u, cp).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn conserving_schemes_satisfy_the_bound(seed in any::<u64>()) {
        let r = evaluate_tradeoff(&random_scheme(seed), DEFAULT_TOL).unwrap();
        prop_assert!(r.applicable());
        prop_assert!(r.slack >= -1e-9, "{r:?}");
        prop_assert!(r.satisfied);
        // rhs - slack recovers lhs up to the rounding of one subtraction.
        prop_assert!((r.rhs - r.slack - r.lhs).abs() <= 4.0 * f64::EPSILON * r.rhs.max(1.0));
    }

    #[test]
    fn charge_moves_without_loss(seed in any::<u64>()) {
        let scheme = random_scheme(seed);
        let direct = charge_identity(&scheme).unwrap();
        let purified = charge_identity_purified(&scheme).unwrap();
        prop_assert!(direct.residual() < 1e-9);
        prop_assert!(purified.residual() < 1e-9);
        prop_assert!((direct.sys_term - purified.sys_term).norm() < 1e-9);
    }

    #[test]
    fn apparatus_blindness_forces_system_overlap(seed in any::<u64>()) {
        // If f_app ≤ ε then f_sys ≥ (lhs - ‖L_S‖ ε) / ‖L_A‖.
        let r = evaluate_tradeoff(&random_scheme(seed), DEFAULT_TOL).unwrap();
        if r.lhs > 0.0 && r.norm_l_app > 0.0 {
            let eps = r.f_app;
            prop_assert!(r.f_sys >= (r.lhs - r.norm_l_sys * eps) / r.norm_l_app - 1e-9);
        }
    }

    #[test]
    fn block_unitaries_commute_with_charge(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let d_s = rng.random_range(1..=3);
        let d_a = rng.random_range(1..=3);
        let cp = ConservedPair::new(&random_charge(d_s, &mut rng), &random_charge(d_a, &mut rng)).unwrap();
        prop_assert_eq!(cp.sector_dims().iter().sum::<usize>(), d_s * d_a);
        let u = assemble(&haar_random_block_unitary(&cp, Seed::new(seed)), &cp).unwrap();
        prop_assert!(u.unitary_deviation() < 1e-12);
        prop_assert!(commutator_norm(&u, cp.total()).unwrap() < 1e-9);
        let params: Vec<f64> = (0..cp.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g = assemble(&exp_generator(&cp, &params).unwrap(), &cp).unwrap();
        prop_assert!(cp.conservation_residual(&g).unwrap() < 1e-9);
        let back = BlockUnitary::from_full(&g, &cp).unwrap();
        prop_assert!((&assemble(&back, &cp).unwrap() - &g).max_abs() < 1e-12);
    }

    #[test]
    fn tripartite_bounds_hold(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let cp = ConservedPair::new(&random_charge(2, &mut rng), &random_charge(2, &mut rng)).unwrap();
        let l_env = random_charge(2, &mut rng);
        let joint = ConservedPair::new(cp.l_sys(), &kron_sum(cp.l_app(), &l_env)).unwrap();
        let u = assemble(&haar_random_block_unitary(&joint, Seed::new(seed).derive(1)), &joint).unwrap();
        let (psi0, psi1) = orthonormal_pair(2, &mut rng);
        let sigma = DensityOperator::new(random_density_matrix(4, rng.random_range(1..=4), &mut rng), vec![2, 2]).unwrap();
        let scheme = MeasurementScheme::new(psi0, psi1, sigma, u, cp).unwrap();
        let r = evaluate_tripartite(&scheme, &l_env, DEFAULT_TOL).unwrap();
        prop_assert!(r.conservation_residual < 1e-8);
        prop_assert!(r.slack_joint >= -1e-9 && r.slack_weak >= -1e-9);
        prop_assert!(r.f_ae <= r.f_app + 1e-9);
        prop_assert!(r.satisfied);
    }

    #[test]
    fn repeatable_conserving_schemes_leave_no_trace(seed in any::<u64>()) {
        // U = 1 ⊗ V with V conserving L_A is repeatable; with lhs > 0 the
        // apparatus must end up indistinguishable.
        let mut rng = Seed::new(seed).rng();
        let l_app = random_charge(3, &mut rng);
        let cp = ConservedPair::new(&spin_z(1), &l_app).unwrap();
        let app_only = ConservedPair::new(&ComplexMatrix::zeros(1, 1), &l_app).unwrap();
        let v = assemble(&haar_random_block_unitary(&app_only, Seed::new(seed)), &app_only).unwrap();
        let u = tensor(&ComplexMatrix::identity(2), &v);
        let (psi0, psi1) = orthonormal_pair(2, &mut rng);
        let omega = PureState::from_amplitudes(haar_vector(3, &mut rng)).unwrap();
        let scheme = MeasurementScheme::new(psi0, psi1, omega.projector(), u, cp).unwrap();
        let r = evaluate_tradeoff(&scheme, DEFAULT_TOL).unwrap();
        let rep = check_repeatability(&scheme, 1e-9).unwrap();
        prop_assert!(rep.repeatable);
        prop_assert!(r.conservation_residual < 1e-9);
        if r.lhs > 1e-6 {
            prop_assert!((rep.apparatus_overlap - 1.0).abs() < 1e-9);
        }
    }
}

/// Mean of `|U_00|²` over Haar unitaries is `1/d`.
#[test]
fn haar_first_moment() {
    for d in [2usize, 3, 5] {
        let mut rng = Seed::new(40 + d as u64).rng();
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| haar_unitary(d, &mut rng)[(0, 0)].norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 1.0 / d as f64).abs() < 3.0 * se,
            "d = {d}: mean {mean}, se {se}"
        );
    }
}

#[test]
fn non_conserving_copier_is_detected() {
    let (alpha, beta) = (0.6, 0.8);
    let c = |x: f64| num_complex::Complex64::new(x, 0.0);
    let psi0 = PureState::from_amplitudes(vec![c(beta), c(-alpha)]).unwrap();
    let psi1 = PureState::from_amplitudes(vec![c(alpha), c(beta)]).unwrap();
    let basis =
        ComplexMatrix::from_columns(2, &[psi0.amplitudes().to_vec(), psi1.amplitudes().to_vec()]);
    let mut cnot = ComplexMatrix::identity(4);
    cnot[(2, 2)] = c(0.0);
    cnot[(3, 3)] = c(0.0);
    cnot[(2, 3)] = c(1.0);
    cnot[(3, 2)] = c(1.0);
    let u = tensor(&basis, &ComplexMatrix::identity(2)).conjugate(&cnot);
    let cp = ConservedPair::new(&spin_z(1), &spin_z(1)).unwrap();
    let scheme =
        MeasurementScheme::new(psi0, psi1, PureState::basis(2, 0).projector(), u, cp).unwrap();
    let r = evaluate_tradeoff(&scheme, DEFAULT_TOL).unwrap();
    assert!(r.f_sys < 1e-15 && r.f_app < 1e-15, "{r:?}");
    assert!((r.lhs - 0.48).abs() < 1e-15);
    assert!(!r.satisfied && !r.applicable());
}
