use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

use waybound::linops::tensor;
use waybound::sampling::{
    haar_unitary, haar_vector, random_density_matrix, random_povm_elements, random_pvm_elements,
};
use waybound::states::{fidelity, fidelity_by_definition, optimal_pvm, povm_overlap};
use waybound::{DensityOperator, Povm, PureState, Seed};

const TOL: f64 = 1e-9;

fn random_state(d: usize, rng: &mut impl Rng) -> DensityOperator {
    let rank = rng.random_range(1..=d);
    DensityOperator::from_matrix(random_density_matrix(d, rank, rng)).unwrap()
}

fn pair(seed: u64, max_d: usize) -> (DensityOperator, DensityOperator, rand_chacha::ChaCha8Rng) {
    let mut rng = Seed::new(seed).rng();
    let d = rng.random_range(1..=max_d);
    let a = random_state(d, &mut rng);
    let b = random_state(d, &mut rng);
    (a, b, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symmetric_and_in_range(seed in any::<u64>()) {
        let (a, b, _) = pair(seed, 4);
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&b, &a).unwrap()).abs() < TOL);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn agrees_with_defining_formula(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let d = rng.random_range(1..=4);
        // Full-rank states keep the literal square roots well conditioned.
        let a = DensityOperator::from_matrix(random_density_matrix(d, d, &mut rng)).unwrap();
        let b = DensityOperator::from_matrix(random_density_matrix(d, d, &mut rng)).unwrap();
        prop_assert!((fidelity(&a, &b).unwrap() - fidelity_by_definition(&a, &b).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn unitary_invariance(seed in any::<u64>()) {
        let (a, b, mut rng) = pair(seed, 4);
        let u = haar_unitary(a.dim(), &mut rng);
        let f = fidelity(&a, &b).unwrap();
        let g = fidelity(&a.evolve(&u).unwrap(), &b.evolve(&u).unwrap()).unwrap();
        prop_assert!((f - g).abs() < TOL);
    }

    #[test]
    fn pure_states_give_overlap_modulus(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let d = rng.random_range(1..=5);
        let u = PureState::from_amplitudes(haar_vector(d, &mut rng)).unwrap();
        let v = PureState::from_amplitudes(haar_vector(d, &mut rng)).unwrap();
        let f = fidelity(&u.projector(), &v.projector()).unwrap();
        prop_assert!((f - u.overlap(&v).norm()).abs() < TOL);
    }

    #[test]
    fn multiplicative_under_tensor_products(seed in any::<u64>()) {
        let (a, b, mut rng) = pair(seed, 3);
        let d = rng.random_range(1..=3);
        let c = random_state(d, &mut rng);
        let e = random_state(d, &mut rng);
        let f = fidelity(&a.tensor(&c), &b.tensor(&e)).unwrap();
        prop_assert!((f - fidelity(&a, &b).unwrap() * fidelity(&c, &e).unwrap()).abs() < TOL);
        // Appending a common state changes nothing.
        prop_assert!((fidelity(&a.tensor(&c), &b.tensor(&c)).unwrap() - fidelity(&a, &b).unwrap()).abs() < TOL);
    }

    #[test]
    fn partial_trace_cannot_lower_fidelity(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let (d1, d2) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let rank = rng.random_range(1..=d1 * d2);
        let a = DensityOperator::new(random_density_matrix(d1 * d2, rank, &mut rng), vec![d1, d2]).unwrap();
        let b = DensityOperator::new(random_density_matrix(d1 * d2, rank, &mut rng), vec![d1, d2]).unwrap();
        let whole = fidelity(&a, &b).unwrap();
        for keep in [0, 1] {
            let part = fidelity(&a.partial_trace(&[keep]).unwrap(), &b.partial_trace(&[keep]).unwrap()).unwrap();
            prop_assert!(part >= whole - TOL);
        }
    }

    #[test]
    fn optimal_measurement_attains_fidelity(seed in any::<u64>()) {
        let (a, b, mut rng) = pair(seed, 3);
        let f = fidelity(&a, &b).unwrap();
        let best = optimal_pvm(&a, &b).unwrap();
        prop_assert!(best.is_projective());
        prop_assert!((povm_overlap(&a, &b, &best).unwrap() - f).abs() < 1e-8);
        for _ in 0..20 {
            let pvm = Povm::projective(random_pvm_elements(a.dim(), &mut rng)).unwrap();
            prop_assert!(povm_overlap(&a, &b, &pvm).unwrap() >= f - 1e-8);
            let povm = Povm::new(random_povm_elements(a.dim(), 3, &mut rng)).unwrap();
            prop_assert!(povm_overlap(&a, &b, &povm).unwrap() >= f - 1e-8);
        }
    }
}

#[test]
fn frozen_values() {
    let zero = PureState::basis(2, 0).projector();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = PureState::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)])
        .unwrap()
        .projector();
    assert!((fidelity(&zero, &plus).unwrap() - h).abs() < 1e-15);
    assert!(
        (fidelity(&zero, &DensityOperator::maximally_mixed(2)).unwrap() - 0.7071067811865475).abs()
            < 1e-15
    );
    let one = PureState::basis(2, 1).projector();
    assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
}

#[test]
fn tensor_of_matrices_matches_state_tensor() {
    let mut rng = Seed::new(5).rng();
    let a = random_state(2, &mut rng);
    let b = random_state(3, &mut rng);
    let t = a.tensor(&b);
    assert_eq!(t.dims(), &[2, 3]);
    assert!((t.matrix() - &tensor(a.matrix(), b.matrix())).max_abs() == 0.0);
}
