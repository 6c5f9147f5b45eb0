//! Random matrices and states used by sweeps, optimizer restarts and tests.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linops::{householder_qr, ComplexMatrix};

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("gaussian entries are finite")
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let (mut q, r) = householder_qr(&ginibre(d, d, rng));
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly random unit vector.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let norm = crate::linops::vector_norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `G G† / tr(G G†)` with `G` a `d × rank` Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    m.scale_real(1.0 / tr).symmetrized()
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(d, d, rng).symmetrized()
}

/// Rank-one projectors onto the columns of a Haar unitary.
pub fn random_pvm_elements<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let u = haar_unitary(d, rng);
    (0..d)
        .map(|j| {
            let col = u.column(j);
            ComplexMatrix::outer(&col, &col)
        })
        .collect()
}

/// `outcomes` POVM elements `S^{-1/2} A_k S^{-1/2}` with `A_k` random PSD
/// and `S = Σ A_k`.
pub fn random_povm_elements<R: Rng + ?Sized>(
    d: usize,
    outcomes: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let rank = rng.random_range(1..=d);
            let g = ginibre(d, rank, rng);
            &g * &g.adjoint()
        })
        .collect();
    let total = raw.iter().skip(1).fold(raw[0].clone(), |acc, a| &acc + a);
    let inv_sqrt = crate::linops::eigh(&total)
        .expect("sum of PSD matrices is Hermitian")
        .map(|l| 1.0 / l.sqrt());
    raw.iter()
        .map(|a| inv_sqrt.conjugate(a).symmetrized())
        .collect()
}
