use proptest::prelude::*;
use rand::Rng;

use waybound::linops::{
    eigh, householder_qr, op_norm, partial_trace, psd_sqrt, singular_values, tensor,
};
use waybound::sampling::{ginibre, random_density_matrix, random_hermitian};
use waybound::Seed;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigh_reconstructs(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let d = rng.random_range(1..=8);
        let h = random_hermitian(d, &mut rng);
        let e = eigh(&h).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.vectors.unitary_deviation() < 1e-12);
        prop_assert!((&e.reconstruct() - &h).max_abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let d = rng.random_range(1..=6);
        let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng);
        let s = psd_sqrt(&rho).unwrap();
        prop_assert!((&(&s * &s) - &rho).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let (da, db) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let a = random_density_matrix(da, da, &mut rng);
        let b = random_density_matrix(db, db, &mut rng);
        let ab = tensor(&a, &b);
        prop_assert!((&partial_trace(&ab, &[da, db], &[0]).unwrap() - &a).max_abs() < 1e-13);
        prop_assert!((&partial_trace(&ab, &[da, db], &[1]).unwrap() - &b).max_abs() < 1e-13);
        prop_assert!((partial_trace(&ab, &[da, db], &[]).unwrap()[(0, 0)].re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn singular_values_and_qr(seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let g = ginibre(r, c, &mut rng);
        let sv = singular_values(&g);
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        let fro: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!((fro - g.frobenius_norm()).abs() < 1e-12);
        prop_assert!((op_norm(&g) - sv[0]).abs() < 1e-15);
        prop_assert!(op_norm(&g) >= g.max_abs() - 1e-12);
        if r == c {
            let (q, rr) = householder_qr(&g);
            prop_assert!(q.unitary_deviation() < 1e-12);
            prop_assert!((&(&q * &rr) - &g).max_abs() < 1e-12);
        }
    }
}
