//! Quantum states, Uhlmann fidelity and the fidelity-attaining measurement.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{
    self, eigh, inner, partial_trace, psd_sqrt, singular_values, trace_product, vector_norm,
    ComplexMatrix, Eigh,
};

/// Norm / trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for `Σ E = 1` and the projector identities.
pub const POVM_TOL: f64 = 1e-9;
/// Eigenvalues of `rho0` below this count as kernel when building the
/// optimal measurement.
pub const KERNEL_TOL: f64 = 1e-10;
/// Eigenvalues below this are dropped when factoring states for the
/// fidelity. Round-off leaves zero eigenvalues near `1e-16`, whose square
/// roots would otherwise show up as `1e-8` of spurious fidelity.
pub const RANK_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureState {
    #[serde(with = "linops::complex_vec")]
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        if amplitudes.len() != dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for factor dims {dims:?}",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm = vector_norm(&amplitudes);
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Single-factor state.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let d = amplitudes.len();
        Self::new(amplitudes, vec![d])
    }

    /// Rescales to unit norm first.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = vector_norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect(), dims)
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); d];
        amplitudes[k] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            dims: vec![d],
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &PureState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: linops::tensor_vec(&self.amplitudes, &other.amplitudes),
            dims: self.dims.iter().chain(&other.dims).copied().collect(),
        }
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator {
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
            dims: self.dims.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity (all within `1e-10`).
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if !matrix.is_square() || matrix.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} density matrix for factor dims {dims:?}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let eig = eigh(&matrix).map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if let Some(&min) = eig.values.first() {
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self {
            matrix: matrix.symmetrized(),
            dims,
        })
    }

    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.rows();
        Self::new(matrix, vec![d])
    }

    /// For matrices that are states by construction (evolutions and partial
    /// traces of valid states).
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        Self {
            matrix: matrix.symmetrized(),
            dims,
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
            dims: vec![d],
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: linops::tensor(&self.matrix, &other.matrix),
            dims: self.dims.iter().chain(&other.dims).copied().collect(),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        let dims = kept.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::from_parts_unchecked(m, dims))
    }

    /// `u ρ u†`; the caller guarantees `u` is unitary.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<DensityOperator> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary on a {}-dim state",
                u.rows(),
                u.cols(),
                self.dim()
            )));
        }
        Ok(Self::from_parts_unchecked(
            u.conjugate(&self.matrix),
            self.dims.clone(),
        ))
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    /// `tr(ρ A)`
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        trace_product(&self.matrix, op)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    /// `B_α` with `E_α = B_α B_α†`.
    factors: Vec<ComplexMatrix>,
    projective: bool,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let d = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?
            .rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        let mut factors = Vec::with_capacity(elements.len());
        for (k, e) in elements.iter().enumerate() {
            if !e.is_square() || e.rows() != d {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has the wrong shape"
                )));
            }
            let eig = eigh(e).map_err(|err| Error::InvalidPovm(format!("element {k}: {err}")))?;
            if eig.values.first().is_some_and(|&l| l < -STATE_TOL) {
                return Err(Error::InvalidPovm(format!("element {k} is not positive")));
            }
            factors.push(factor_from_eigh(&eig));
            sum = &sum + e;
        }
        let dev = (&sum - &ComplexMatrix::identity(d)).max_abs();
        if dev > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {dev:e}"
            )));
        }
        Ok(Self {
            elements: elements.iter().map(ComplexMatrix::symmetrized).collect(),
            factors,
            projective: false,
        })
    }

    /// Like [`Povm::new`], additionally requiring orthogonal projectors.
    pub fn projective(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let mut povm = Self::new(elements)?;
        for (i, a) in povm.elements.iter().enumerate() {
            if (&(a * a) - a).max_abs() > POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not a projector"
                )));
            }
            for b in &povm.elements[i + 1..] {
                if (a * b).max_abs() > POVM_TOL {
                    return Err(Error::InvalidPovm(
                        "projectors are not mutually orthogonal".into(),
                    ));
                }
            }
        }
        povm.projective = true;
        Ok(povm)
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }
}

fn check_same_dim(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Standard purification on `d ⊗ d`: `Σ_k sqrt(λ_k) |v_k>|e_k>` with the
/// eigenvalues in descending order and zero terms dropped.
pub fn purify(sigma: &DensityOperator) -> Result<PureState> {
    let d = sigma.dim();
    let eig = eigh(sigma.matrix()).map_err(|e| Error::InvalidState(e.to_string()))?;
    let mut order: Vec<usize> = (0..d).collect();
    // Stable: equal eigenvalues keep their ascending-index order.
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]));

    let mut amplitudes = vec![C64::new(0.0, 0.0); d * d];
    for (slot, &k) in order.iter().enumerate() {
        let lambda = eig.values[k].max(0.0);
        if lambda == 0.0 {
            continue;
        }
        let w = lambda.sqrt();
        for i in 0..d {
            amplitudes[i * d + slot] += eig.vectors[(i, k)] * w;
        }
    }
    PureState::normalized(amplitudes, vec![d, d])
}

/// `A` with `ρ = A A†`, keeping only eigenvalues above [`RANK_TOL`].
fn psd_factor(rho: &DensityOperator) -> Result<ComplexMatrix> {
    Ok(factor_from_eigh(&eigh(rho.matrix())?))
}

fn factor_from_eigh(eig: &Eigh) -> ComplexMatrix {
    let support: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > RANK_TOL)
        .collect();
    let mut a = eig.vectors.select_columns(&support);
    for (j, &k) in support.iter().enumerate() {
        let w = eig.values[k].sqrt();
        for i in 0..a.rows() {
            a[(i, j)] *= w;
        }
    }
    a
}

/// Unit-trace factor `B` with `σ ≈ B B†`: eigenvalues at or below
/// [`RANK_TOL`] are dropped and the rest rescaled to trace one.
pub fn state_factor(sigma: &DensityOperator) -> Result<ComplexMatrix> {
    let b = psd_factor(sigma)?;
    let norm = b.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::InvalidState("state has no support".into()));
    }
    Ok(b.scale_real(1.0 / norm))
}

/// Factor of the reduced state on the factors `keep` of `Y Y†`, where the
/// rows of `Y` are indexed by the tensor factors `dims`. The traced-out
/// indices move into the columns.
pub fn reduced_factor(y: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if total != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows for factors {dims:?}",
            y.rows()
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "kept factors {keep:?} for {} factors",
            dims.len()
        )));
    }
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim = total / kept_dim;
    let cols = y.cols();
    let mut out = ComplexMatrix::zeros(kept_dim, traced_dim * cols);
    for r in 0..total {
        let (mut kept, mut traced, mut rest) = (0, 0, r);
        let mut digits = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            digits[f] = rest % dims[f];
            rest /= dims[f];
        }
        for (f, &digit) in digits.iter().enumerate() {
            if keep.contains(&f) {
                kept = kept * dims[f] + digit;
            } else {
                traced = traced * dims[f] + digit;
            }
        }
        for k in 0..cols {
            out[(kept, traced * cols + k)] = y[(r, k)];
        }
    }
    Ok(out)
}

/// Fidelity of `X0 X0†` and `X1 X1†`: the trace norm of `X0† X1`.
///
/// No square roots of eigenvalues are taken, so states obtained from pure
/// global vectors keep full precision near orthogonality.
pub fn fidelity_from_factors(x0: &ComplexMatrix, x1: &ComplexMatrix) -> Result<f64> {
    if x0.rows() != x1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "factors with {} and {} rows",
            x0.rows(),
            x1.rows()
        )));
    }
    if x0.cols() == 0 || x1.cols() == 0 {
        return Ok(0.0);
    }
    let f: f64 = singular_values(&(&x0.adjoint() * x1)).iter().sum();
    Ok(clip_unit(f))
}

/// Uhlmann fidelity `tr sqrt(sqrt(ρ0) ρ1 sqrt(ρ0))` (square-root convention).
///
/// Evaluated as the trace norm of `A0† A1` for factors `ρi = Ai Ai†`, which
/// equals the defining expression but keeps near-orthogonal states accurate.
pub fn fidelity(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    check_same_dim(rho0, rho1)?;
    fidelity_from_factors(&psd_factor(rho0)?, &psd_factor(rho1)?)
}

/// The defining formula, evaluated literally with [`psd_sqrt`].
pub fn fidelity_by_definition(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    check_same_dim(rho0, rho1)?;
    let s = psd_sqrt(rho0.matrix())?;
    let inner = s.conjugate(rho1.matrix()).symmetrized();
    Ok(clip_unit(psd_sqrt(&inner)?.trace().re))
}

fn clip_unit(f: f64) -> f64 {
    if (-1e-9..0.0).contains(&f) {
        0.0
    } else if f > 1.0 && f <= 1.0 + 1e-9 {
        1.0
    } else {
        f
    }
}

/// Bhattacharyya overlap `Σ_α sqrt(tr(ρ0 E_α) tr(ρ1 E_α))` of the two
/// outcome distributions.
pub fn povm_overlap(rho0: &DensityOperator, rho1: &DensityOperator, povm: &Povm) -> Result<f64> {
    check_same_dim(rho0, rho1)?;
    if povm.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dim POVM for {}-dim states",
            povm.dim(),
            rho0.dim()
        )));
    }
    // tr(ρ E) = ‖A† B‖²_F for ρ = A A†, E = B B†. Summing squared moduli
    // keeps tiny probabilities accurate instead of leaving 1e-16 residue.
    let a0 = psd_factor(rho0)?.adjoint();
    let a1 = psd_factor(rho1)?.adjoint();
    let prob = |a: &ComplexMatrix, b: &ComplexMatrix| -> f64 {
        if a.rows() == 0 || b.cols() == 0 {
            return 0.0;
        }
        (a * b).frobenius_norm().powi(2)
    };
    Ok(povm
        .factors
        .iter()
        .map(|b| (prob(&a0, b) * prob(&a1, b)).sqrt())
        .sum())
}

/// Rank-one PVM whose outcome overlap equals the fidelity.
///
/// On the support of `ρ0` the measurement is the eigenbasis of
/// `M = ρ0^{-1/2} sqrt(ρ0^{1/2} ρ1 ρ0^{1/2}) ρ0^{-1/2}`; the kernel is
/// filled in by Gram-Schmidt over the canonical basis.
pub fn optimal_pvm(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<Povm> {
    check_same_dim(rho0, rho1)?;
    let n = rho0.dim();
    let eig0 = eigh(rho0.matrix())?;
    let support: Vec<usize> = (0..n).filter(|&k| eig0.values[k] >= KERNEL_TOL).collect();
    let w = eig0.vectors.select_columns(&support);
    let root: Vec<f64> = support.iter().map(|&k| eig0.values[k].sqrt()).collect();
    let r = support.len();

    // Everything below lives in the support basis, where ρ0 = diag(λ).
    let rho1_s = w.adjoint().conjugate(rho1.matrix());
    let mut inner = rho1_s.clone();
    for i in 0..r {
        for j in 0..r {
            inner[(i, j)] = rho1_s[(i, j)] * root[i] * root[j];
        }
    }
    let s = psd_sqrt(&inner.symmetrized())?;
    let mut m = s.clone();
    for i in 0..r {
        for j in 0..r {
            m[(i, j)] = s[(i, j)] / (root[i] * root[j]);
        }
    }
    let eig_m = eigh(&m.symmetrized())?;
    let basis = &w * &eig_m.vectors;

    let mut vectors: Vec<Vec<C64>> = (0..r).map(|j| basis.column(j)).collect();
    complete_basis(&mut vectors, n);
    Povm::projective(vectors.iter().map(|v| ComplexMatrix::outer(v, v)).collect())
}

/// Extends an orthonormal set to a basis of C^n with Gram-Schmidt over
/// `e_0, e_1, ...` in order.
fn complete_basis(vectors: &mut Vec<Vec<C64>>, n: usize) {
    for k in 0..n {
        if vectors.len() == n {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[k] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for u in vectors.iter() {
                let c = inner(u, &v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = vector_norm(&v);
        if norm > 1e-6 {
            vectors.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
}
