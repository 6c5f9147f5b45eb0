//! Additive conserved charges and the unitaries that respect them.
//!
//! A unitary commutes with `L = L_S ⊗ 1 + 1 ⊗ L_A` exactly when it is
//! block diagonal over the eigenspaces of `L` (the charge sectors). Sectors
//! are found numerically and conserving unitaries are stored one block per
//! sector.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linops::{commutator_norm, eigh, kron_sum, ComplexMatrix, HERMITIAN_TOL};
use crate::rng::Seed;
use crate::sampling::haar_unitary;

/// Relative gap below which neighbouring eigenvalues share a sector.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;
/// Unitarity tolerance for blocks.
pub const BLOCK_UNITARY_TOL: f64 = 1e-9;
/// Commutator residual below which a unitary counts as conserving.
pub const CONSERVATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ChargeSector {
    pub charge: f64,
    /// Orthonormal eigenvectors of the total charge, as columns.
    pub basis: ComplexMatrix,
}

impl ChargeSector {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * &self.basis.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct ConservedPair {
    l_sys: ComplexMatrix,
    l_app: ComplexMatrix,
    total: ComplexMatrix,
    sectors: Vec<ChargeSector>,
    /// Largest eigenvalue gap that was merged into a single sector.
    max_merged_gap: f64,
}

fn check_hermitian(name: &str, m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Sector decomposition of `l_sys ⊗ 1 + 1 ⊗ l_app`.
///
/// Eigenvalues are grouped when consecutive gaps are at most
/// `grouping_tol · (1 + max|λ|)`; sectors are sorted by ascending charge.
pub fn build_sectors(
    l_sys: &ComplexMatrix,
    l_app: &ComplexMatrix,
    grouping_tol: f64,
) -> Result<ConservedPair> {
    check_hermitian("l_sys", l_sys)?;
    check_hermitian("l_app", l_app)?;
    if !(grouping_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grouping tolerance {grouping_tol}"
        )));
    }
    let l_sys = l_sys.symmetrized();
    let l_app = l_app.symmetrized();
    let total = kron_sum(&l_sys, &l_app);
    let eig = eigh(&total)?;
    let scale = 1.0 + eig.values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let gap_limit = grouping_tol * scale;

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut max_merged_gap: f64 = 0.0;
    for (k, &l) in eig.values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if l - eig.values[*g.last().unwrap()] <= gap_limit => {
                max_merged_gap = max_merged_gap.max(l - eig.values[*g.last().unwrap()]);
                g.push(k);
            }
            _ => groups.push(vec![k]),
        }
    }
    let sectors = groups
        .into_iter()
        .map(|g| ChargeSector {
            charge: g.iter().map(|&k| eig.values[k]).sum::<f64>() / g.len() as f64,
            basis: eig.vectors.select_columns(&g),
        })
        .collect();
    Ok(ConservedPair {
        l_sys,
        l_app,
        total,
        sectors,
        max_merged_gap,
    })
}

impl ConservedPair {
    pub fn new(l_sys: &ComplexMatrix, l_app: &ComplexMatrix) -> Result<Self> {
        build_sectors(l_sys, l_app, DEFAULT_GROUPING_TOL)
    }

    pub fn l_sys(&self) -> &ComplexMatrix {
        &self.l_sys
    }

    pub fn l_app(&self) -> &ComplexMatrix {
        &self.l_app
    }

    /// `L_S ⊗ 1 + 1 ⊗ L_A`
    pub fn total(&self) -> &ComplexMatrix {
        &self.total
    }

    pub fn sectors(&self) -> &[ChargeSector] {
        &self.sectors
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(ChargeSector::dim).collect()
    }

    pub fn charges(&self) -> Vec<f64> {
        self.sectors.iter().map(|s| s.charge).collect()
    }

    pub fn d_sys(&self) -> usize {
        self.l_sys.rows()
    }

    pub fn d_app(&self) -> usize {
        self.l_app.rows()
    }

    pub fn dim(&self) -> usize {
        self.total.rows()
    }

    pub fn max_merged_gap(&self) -> f64 {
        self.max_merged_gap
    }

    /// Number of real generator parameters, `Σ d_k²`.
    pub fn param_count(&self) -> usize {
        self.sectors.iter().map(|s| s.dim() * s.dim()).sum()
    }

    /// `‖[U, L]‖`
    pub fn conservation_residual(&self, u: &ComplexMatrix) -> Result<f64> {
        commutator_norm(u, &self.total)
    }
}

/// A conserving unitary, one unitary block per charge sector.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockUnitary {
    blocks: Vec<ComplexMatrix>,
}

impl BlockUnitary {
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        for b in &blocks {
            let deviation = b.unitary_deviation();
            if deviation > BLOCK_UNITARY_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { blocks })
    }

    pub fn identity(cp: &ConservedPair) -> Self {
        Self {
            blocks: cp
                .sector_dims()
                .into_iter()
                .map(ComplexMatrix::identity)
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    /// Restriction of a full-space conserving unitary to the sectors of `cp`.
    pub fn from_full(u: &ComplexMatrix, cp: &ConservedPair) -> Result<Self> {
        if u.rows() != cp.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary for a {}-dim space",
                u.rows(),
                u.cols(),
                cp.dim()
            )));
        }
        let residual = cp.conservation_residual(u)?;
        if residual > CONSERVATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "unitary does not conserve the charge ({residual:e})"
            )));
        }
        Self::new(
            cp.sectors
                .iter()
                .map(|s| s.basis.adjoint().conjugate(u))
                .collect(),
        )
    }
}

/// `U = Σ_k V_k B_k V_k†` over the sector bases `V_k`.
pub fn assemble(bu: &BlockUnitary, cp: &ConservedPair) -> Result<ComplexMatrix> {
    if bu.blocks.len() != cp.sectors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks for {} sectors",
            bu.blocks.len(),
            cp.sectors.len()
        )));
    }
    let n = cp.dim();
    let mut u = ComplexMatrix::zeros(n, n);
    for (k, (b, s)) in bu.blocks.iter().zip(&cp.sectors).enumerate() {
        if b.rows() != s.dim() || !b.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "block {k} is {}x{} but the sector has dimension {}",
                b.rows(),
                b.cols(),
                s.dim()
            )));
        }
        u = &u + &s.basis.conjugate(b);
    }
    Ok(u)
}

/// Independent Haar-random block per sector, block `k` drawn from stream
/// `seed.derive(k)`.
pub fn haar_random_block_unitary(cp: &ConservedPair, seed: Seed) -> BlockUnitary {
    BlockUnitary {
        blocks: cp
            .sectors
            .iter()
            .enumerate()
            .map(|(k, s)| haar_unitary(s.dim(), &mut seed.derive(k as u64).rng()))
            .collect(),
    }
}

/// Hermitian `d × d` matrix from `d²` reals: the diagonal first, then the
/// strict upper triangle row by row as (re, im) pairs.
pub fn hermitian_from_params(d: usize, params: &[f64]) -> Result<ComplexMatrix> {
    if params.len() != d * d {
        return Err(Error::ParameterCount {
            expected: d * d,
            got: params.len(),
        });
    }
    let mut h = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = C64::new(params[i], 0.0);
    }
    let mut at = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(params[at], params[at + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            at += 2;
        }
    }
    Ok(h)
}

/// Inverse of [`hermitian_from_params`] (reads the upper triangle).
pub fn params_from_hermitian(h: &ComplexMatrix) -> Vec<f64> {
    let d = h.rows();
    let mut params: Vec<f64> = (0..d).map(|i| h[(i, i)].re).collect();
    for i in 0..d {
        for j in (i + 1)..d {
            params.push(h[(i, j)].re);
            params.push(h[(i, j)].im);
        }
    }
    params
}

/// Block `k` is `exp(i H_k)` with `H_k` read from the next `d_k²` params.
pub fn exp_generator(cp: &ConservedPair, params: &[f64]) -> Result<BlockUnitary> {
    let expected = cp.param_count();
    if params.len() != expected {
        return Err(Error::ParameterCount {
            expected,
            got: params.len(),
        });
    }
    let mut blocks = Vec::with_capacity(cp.sectors.len());
    let mut at = 0;
    for s in &cp.sectors {
        let d = s.dim();
        let h = hermitian_from_params(d, &params[at..at + d * d])?;
        at += d * d;
        let block = if d == 1 {
            let theta = h[(0, 0)].re;
            ComplexMatrix::from_diagonal(&[C64::new(theta.cos(), theta.sin())])
        } else {
            eigh(&h)?.map_complex(|l| C64::new(l.cos(), l.sin()))
        };
        blocks.push(block);
    }
    Ok(BlockUnitary { blocks })
}

/// Generator coordinates of `exp(i G)` for a Hermitian `G` on the full space
/// that commutes with the total charge.
pub fn generator_params(cp: &ConservedPair, g: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian("generator", g)?;
    if g.rows() != cp.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dim generator for a {}-dim space",
            g.rows(),
            cp.dim()
        )));
    }
    let residual = commutator_norm(g, &cp.total)?;
    if residual > CONSERVATION_TOL {
        return Err(Error::InvalidArgument(format!(
            "generator does not conserve the charge ({residual:e})"
        )));
    }
    Ok(cp
        .sectors
        .iter()
        .flat_map(|s| params_from_hermitian(&s.basis.adjoint().conjugate(g)))
        .collect())
}

/// `Σ_k ½ σ_z^(k)` on `n` qubits, with `|1> = e_0` (spin up) on each qubit.
/// `n = 0` gives the 1×1 zero matrix.
pub fn spin_z(n: usize) -> ComplexMatrix {
    let d = 1usize << n;
    let diag: Vec<f64> = (0..d)
        .map(|i| {
            (0..n)
                .map(|k| if (i >> k) & 1 == 0 { 0.5 } else { -0.5 })
                .sum()
        })
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Parses a named charge preset; currently `spin-z(n)`.
pub fn parse_preset(name: &str) -> Result<ComplexMatrix> {
    let name = name.trim();
    let inner = name
        .strip_prefix("spin-z(")
        .and_then(|rest| rest.strip_suffix(')'))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))?;
    let n: usize = inner
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad spin count in `{name}`")))?;
    if n > 12 {
        return Err(Error::InvalidArgument(format!("spin-z({n}) is too large")));
    }
    Ok(spin_z(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::tensor;

    fn sz() -> ComplexMatrix {
        spin_z(1)
    }

    #[test]
    fn spin_half_pair_sectors() {
        let cp = ConservedPair::new(&sz(), &sz()).unwrap();
        assert_eq!(cp.charges(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(cp.sector_dims(), vec![1, 2, 1]);
        assert_eq!(cp.param_count(), 6);
    }

    #[test]
    fn zero_apparatus_charge_gives_system_eigenspaces() {
        let l_sys = ComplexMatrix::from_real_diagonal(&[2.0, -1.0, 2.0]);
        let cp = ConservedPair::new(&l_sys, &ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(cp.charges(), vec![-1.0, 2.0]);
        assert_eq!(cp.sector_dims(), vec![2, 4]);
        let l = tensor(&l_sys, &ComplexMatrix::identity(2));
        for s in cp.sectors() {
            let lv = &l * &s.basis;
            assert!((&lv - &s.basis.scale_real(s.charge)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn three_spin_apparatus_binomial_sectors() {
        // Charges are sums of ±1/2 over four spins: C(4, k) ways each.
        let cp = ConservedPair::new(&sz(), &spin_z(3)).unwrap();
        assert_eq!(cp.charges(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(cp.sector_dims(), vec![1, 4, 6, 4, 1]);
    }

    #[test]
    fn grouping_tolerance_merges_close_charges() {
        let l_sys = ComplexMatrix::from_real_diagonal(&[0.0, 1e-7]);
        let l_app = ComplexMatrix::zeros(1, 1);
        assert_eq!(
            build_sectors(&l_sys, &l_app, 1e-9).unwrap().sectors().len(),
            2
        );
        let merged = build_sectors(&l_sys, &l_app, 1e-6).unwrap();
        assert_eq!(merged.sectors().len(), 1);
        assert!((merged.max_merged_gap() - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn rejects_non_hermitian() {
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            ConservedPair::new(&bad, &sz()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn identity_blocks_assemble_to_identity() {
        let cp = ConservedPair::new(&sz(), &spin_z(2)).unwrap();
        let u = assemble(&BlockUnitary::identity(&cp), &cp).unwrap();
        assert!((&u - &ComplexMatrix::identity(8)).max_abs() < 1e-15);
    }

    #[test]
    fn phase_on_one_dim_sector() {
        let cp = ConservedPair::new(&sz(), &sz()).unwrap();
        let theta: f64 = 0.7;
        let phase = C64::new(theta.cos(), theta.sin());
        let mut blocks: Vec<ComplexMatrix> = cp
            .sector_dims()
            .into_iter()
            .map(ComplexMatrix::identity)
            .collect();
        blocks[2] = ComplexMatrix::from_diagonal(&[phase]);
        let u = assemble(&BlockUnitary::new(blocks).unwrap(), &cp).unwrap();
        // Charge +1 is |1,1> = e_0.
        assert!((u[(0, 0)] - phase).norm() < 1e-15);
        assert!((u[(3, 3)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn assemble_checks_shapes() {
        let cp = ConservedPair::new(&sz(), &sz()).unwrap();
        let wrong = BlockUnitary::new(vec![ComplexMatrix::identity(1); 3]).unwrap();
        assert!(matches!(
            assemble(&wrong, &cp),
            Err(Error::DimensionMismatch(_))
        ));
        let short = BlockUnitary::new(vec![ComplexMatrix::identity(1)]).unwrap();
        assert!(assemble(&short, &cp).is_err());
    }

    #[test]
    fn haar_blocks_are_deterministic_and_unitary() {
        let cp = ConservedPair::new(&sz(), &spin_z(2)).unwrap();
        let a = haar_random_block_unitary(&cp, Seed::new(11));
        let b = haar_random_block_unitary(&cp, Seed::new(11));
        assert_eq!(a, b);
        for blk in a.blocks() {
            assert!(blk.unitary_deviation() < 1e-10);
        }
        assert_ne!(a, haar_random_block_unitary(&cp, Seed::new(12)));
    }

    #[test]
    fn exp_generator_examples() {
        let cp = ConservedPair::new(&sz(), &sz()).unwrap();
        let zero = exp_generator(&cp, &[0.0; 6]).unwrap();
        assert_eq!(zero, BlockUnitary::identity(&cp));

        let mut params = vec![0.0; 6];
        params[0] = 0.3;
        let bu = exp_generator(&cp, &params).unwrap();
        assert_eq!(bu.blocks()[0][(0, 0)], C64::new(0.3f64.cos(), 0.3f64.sin()));

        assert!(matches!(
            exp_generator(&cp, &[0.0; 5]),
            Err(Error::ParameterCount {
                expected: 6,
                got: 5
            })
        ));
    }

    #[test]
    fn hermitian_params_round_trip() {
        let params: Vec<f64> = (0..9).map(|i| i as f64 * 0.37 - 1.0).collect();
        let h = hermitian_from_params(3, &params).unwrap();
        assert_eq!(h.hermitian_deviation(), 0.0);
        assert_eq!(params_from_hermitian(&h), params);
    }

    #[test]
    fn generator_params_invert_exp_generator() {
        let cp = ConservedPair::new(&sz(), &spin_z(2)).unwrap();
        let params: Vec<f64> = (0..cp.param_count())
            .map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5)
            .collect();
        let u = assemble(&exp_generator(&cp, &params).unwrap(), &cp).unwrap();
        let mut g = ComplexMatrix::zeros(cp.dim(), cp.dim());
        let mut at = 0;
        for s in cp.sectors() {
            let d = s.dim();
            let h = hermitian_from_params(d, &params[at..at + d * d]).unwrap();
            at += d * d;
            g = &g + &s.basis.conjugate(&h);
        }
        let back = generator_params(&cp, &g).unwrap();
        for (a, b) in back.iter().zip(&params) {
            assert!((a - b).abs() < 1e-12);
        }
        let u2 = assemble(&exp_generator(&cp, &back).unwrap(), &cp).unwrap();
        assert!((&u - &u2).max_abs() < 1e-12);
    }

    #[test]
    fn presets() {
        assert_eq!(parse_preset("spin-z(2)").unwrap(), spin_z(2));
        assert_eq!(
            spin_z(2),
            ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, -1.0])
        );
        assert_eq!(spin_z(0), ComplexMatrix::zeros(1, 1));
        assert!(parse_preset("spin-x(2)").is_err());
        assert!(parse_preset("spin-z(two)").is_err());
    }
}
