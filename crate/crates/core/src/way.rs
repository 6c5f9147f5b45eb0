//! Evaluation of the conservation-law trade-off for concrete measurement
//! schemes, and seeded Monte-Carlo sweeps over conserving dynamics.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conservation::{assemble, haar_random_block_unitary, ConservedPair, CONSERVATION_TOL};
use crate::error::{Error, Result};
use crate::linops::{inner, kron_sum, op_norm, tensor, trace_product, ComplexMatrix};
use crate::rng::Seed;
use crate::sampling::{haar_unitary, haar_vector, random_density_matrix};
use crate::states::{
    fidelity_from_factors, purify, reduced_factor, state_factor, DensityOperator, PureState,
};

/// Default violation tolerance on the slack.
pub const DEFAULT_TOL: f64 = 1e-9;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const SCHEME_UNITARY_TOL: f64 = 1e-9;

/// System states, apparatus state and interaction.
///
/// `sigma` lives on the apparatus, or on apparatus ⊗ environment in
/// tripartite mode; `u` acts on system ⊗ (whatever `sigma` lives on).
#[derive(Clone, Debug)]
pub struct MeasurementScheme {
    psi0: PureState,
    psi1: PureState,
    sigma: DensityOperator,
    u: ComplexMatrix,
    cp: ConservedPair,
}

impl MeasurementScheme {
    pub fn new(
        psi0: PureState,
        psi1: PureState,
        sigma: DensityOperator,
        u: ComplexMatrix,
        cp: ConservedPair,
    ) -> Result<Self> {
        let d_sys = cp.d_sys();
        if psi0.dim() != d_sys || psi1.dim() != d_sys {
            return Err(Error::DimensionMismatch(format!(
                "system states of dimension {} and {} for a {d_sys}-dim system",
                psi0.dim(),
                psi1.dim()
            )));
        }
        if sigma.dims().first() != Some(&cp.d_app()) {
            return Err(Error::DimensionMismatch(format!(
                "apparatus state with factors {:?} for a {}-dim apparatus",
                sigma.dims(),
                cp.d_app()
            )));
        }
        let n = d_sys * sigma.dim();
        if !u.is_square() || u.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary on a {n}-dim space",
                u.rows(),
                u.cols()
            )));
        }
        let overlap = psi0.overlap(&psi1).norm();
        if overlap > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { overlap });
        }
        let deviation = u.unitary_deviation();
        if deviation > SCHEME_UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            psi0,
            psi1,
            sigma,
            u,
            cp,
        })
    }

    pub fn psi0(&self) -> &PureState {
        &self.psi0
    }

    pub fn psi1(&self) -> &PureState {
        &self.psi1
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn pair(&self) -> &ConservedPair {
        &self.cp
    }

    /// `U (|ψ_i><ψ_i| ⊗ σ) U†` for `i = 0, 1`.
    pub fn final_states(&self) -> Result<(DensityOperator, DensityOperator)> {
        let evolve = |psi: &PureState| psi.projector().tensor(&self.sigma).evolve(&self.u);
        Ok((evolve(&self.psi0)?, evolve(&self.psi1)?))
    }

    /// Factors `Y_i = U (|ψ_i> ⊗ B)` of the final global states, with
    /// `σ = B B†` up to dropping round-off eigenvalues of `σ`.
    pub fn final_factors(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let b = state_factor(&self.sigma)?;
        let column =
            |psi: &PureState| ComplexMatrix::from_columns(psi.dim(), &[psi.amplitudes().to_vec()]);
        Ok((
            &self.u * &tensor(&column(&self.psi0), &b),
            &self.u * &tensor(&column(&self.psi1), &b),
        ))
    }

    /// Tensor factors of the joint space: system first, then those of `σ`.
    pub fn joint_dims(&self) -> Vec<usize> {
        std::iter::once(self.cp.d_sys())
            .chain(self.sigma.dims().iter().copied())
            .collect()
    }

    /// Fidelity of the two final states reduced to the factors `keep`.
    pub fn reduced_fidelity(&self, keep: &[usize]) -> Result<f64> {
        Ok(self.reduced_fidelities(&[keep])?[0])
    }

    pub fn reduced_fidelities(&self, keeps: &[&[usize]]) -> Result<Vec<f64>> {
        let (y0, y1) = self.final_factors()?;
        let dims = self.joint_dims();
        keeps
            .iter()
            .map(|keep| {
                fidelity_from_factors(
                    &reduced_factor(&y0, &dims, keep)?,
                    &reduced_factor(&y1, &dims, keep)?,
                )
            })
            .collect()
    }

    /// `<ψ0|L_S|ψ1>`
    pub fn charge_matrix_element(&self) -> C64 {
        self.cp
            .l_sys()
            .expectation(self.psi0.amplitudes(), self.psi1.amplitudes())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffReport {
    /// `|<ψ0|L_S|ψ1>|`
    pub lhs: f64,
    pub f_sys: f64,
    pub f_app: f64,
    pub norm_l_sys: f64,
    pub norm_l_app: f64,
    /// `‖L_A‖ f_sys + ‖L_S‖ f_app`
    pub rhs: f64,
    pub slack: f64,
    /// `‖[U, L_S ⊗ 1 + 1 ⊗ L_A]‖`
    pub conservation_residual: f64,
    pub satisfied: bool,
    /// `|<Ψ0|U†(L_S + L_A)U|Ψ1> - <ψ0|L_S|ψ1>|`, zero for conserving `U`.
    pub charge_identity_residual: f64,
}

impl TradeoffReport {
    /// Whether the conservation hypothesis holds, so the inequality applies.
    pub fn applicable(&self) -> bool {
        self.conservation_residual <= CONSERVATION_TOL
    }

    /// An unsatisfied report whose hypothesis held.
    pub fn is_theorem_violation(&self) -> bool {
        self.applicable() && !self.satisfied
    }
}

/// The two terms of `<Ψ0|U†(L_S + L_A)U|Ψ1>` and the target `<ψ0|L_S|ψ1>`,
/// evaluated with `σ` as a density operator:
/// `<Ψ0|U† X U|Ψ1> = tr(X · U (|ψ1><ψ0| ⊗ σ) U†)`.
#[derive(Clone, Copy, Debug)]
pub struct ChargeIdentity {
    pub sys_term: C64,
    pub app_term: C64,
    pub target: C64,
}

impl ChargeIdentity {
    pub fn residual(&self) -> f64 {
        (self.sys_term + self.app_term - self.target).norm()
    }
}

pub fn charge_identity(scheme: &MeasurementScheme) -> Result<ChargeIdentity> {
    let cp = &scheme.cp;
    require_bipartite(scheme)?;
    let cross = ComplexMatrix::outer(scheme.psi1.amplitudes(), scheme.psi0.amplitudes());
    let evolved = scheme.u.conjugate(&tensor(&cross, scheme.sigma.matrix()));
    let l_sys_full = tensor(cp.l_sys(), &ComplexMatrix::identity(cp.d_app()));
    let l_app_full = tensor(&ComplexMatrix::identity(cp.d_sys()), cp.l_app());
    Ok(ChargeIdentity {
        sys_term: trace_product(&l_sys_full, &evolved),
        app_term: trace_product(&l_app_full, &evolved),
        target: scheme.charge_matrix_element(),
    })
}

/// Same quantity, through an explicit purification `|Ω>` of `σ` and the
/// vector states `|Ψ_i> = |ψ_i> ⊗ |Ω>` with `U ⊗ 1` on the dilated space.
pub fn charge_identity_purified(scheme: &MeasurementScheme) -> Result<ChargeIdentity> {
    let cp = &scheme.cp;
    require_bipartite(scheme)?;
    let omega = purify(&scheme.sigma)?;
    let d_anc = scheme.sigma.dim();
    let u_dil = tensor(&scheme.u, &ComplexMatrix::identity(d_anc));
    let big0 = u_dil.mul_vec(scheme.psi0.tensor(&omega).amplitudes());
    let big1 = u_dil.mul_vec(scheme.psi1.tensor(&omega).amplitudes());
    let id_anc = ComplexMatrix::identity(d_anc);
    let l_sys_full = tensor(
        &tensor(cp.l_sys(), &ComplexMatrix::identity(cp.d_app())),
        &id_anc,
    );
    let l_app_full = tensor(
        &tensor(&ComplexMatrix::identity(cp.d_sys()), cp.l_app()),
        &id_anc,
    );
    Ok(ChargeIdentity {
        sys_term: inner(&big0, &l_sys_full.mul_vec(&big1)),
        app_term: inner(&big0, &l_app_full.mul_vec(&big1)),
        target: scheme.charge_matrix_element(),
    })
}

fn require_bipartite(scheme: &MeasurementScheme) -> Result<()> {
    if scheme.sigma.dim() != scheme.cp.d_app() {
        return Err(Error::DimensionMismatch(format!(
            "bipartite evaluation needs a {}-dim apparatus state, got factors {:?}",
            scheme.cp.d_app(),
            scheme.sigma.dims()
        )));
    }
    Ok(())
}

/// Evaluates both sides of the trade-off for one scheme. Violations are
/// reported through `satisfied`, never raised.
pub fn evaluate_tradeoff(scheme: &MeasurementScheme, tol: f64) -> Result<TradeoffReport> {
    require_bipartite(scheme)?;
    let cp = &scheme.cp;
    let f = scheme.reduced_fidelities(&[&[0], &[1]])?;
    let (f_sys, f_app) = (f[0], f[1]);
    let norm_l_sys = op_norm(cp.l_sys());
    let norm_l_app = op_norm(cp.l_app());
    let lhs = scheme.charge_matrix_element().norm();
    let rhs = norm_l_app * f_sys + norm_l_sys * f_app;
    let slack = rhs - lhs;
    Ok(TradeoffReport {
        lhs,
        f_sys,
        f_app,
        norm_l_sys,
        norm_l_app,
        rhs,
        slack,
        conservation_residual: cp.conservation_residual(&scheme.u)?,
        satisfied: slack >= -tol,
        charge_identity_residual: charge_identity(scheme)?.residual(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SigmaMode {
    /// Haar-random pure apparatus state per trial.
    PureRandom,
    /// Normalized Ginibre `G G†` per trial (full rank).
    MixedRandom,
    Fixed(DensityOperator),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitaryMode {
    /// Haar-random block per charge sector.
    Conserving,
    /// Haar-random on the whole space; ignores the charge. Control group.
    HaarFull,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: Seed,
    pub sigma_mode: SigmaMode,
    pub unitary_mode: UnitaryMode,
    pub tol: f64,
}

impl SweepConfig {
    pub fn new(trials: usize, seed: Seed, sigma_mode: SigmaMode) -> Self {
        Self {
            trials,
            seed,
            sigma_mode,
            unitary_mode: UnitaryMode::Conserving,
            tol: DEFAULT_TOL,
        }
    }
}

fn sample_sigma(mode: &SigmaMode, dims: &[usize], seed: Seed) -> Result<DensityOperator> {
    let d: usize = dims.iter().product();
    let mut rng = seed.rng();
    match mode {
        SigmaMode::PureRandom => {
            Ok(PureState::new(haar_vector(d, &mut rng), dims.to_vec())?.projector())
        }
        SigmaMode::MixedRandom => {
            DensityOperator::new(random_density_matrix(d, d, &mut rng), dims.to_vec())
        }
        SigmaMode::Fixed(sigma) => {
            if sigma.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "fixed apparatus state of dimension {} for factors {dims:?}",
                    sigma.dim()
                )));
            }
            DensityOperator::new(sigma.matrix().clone(), dims.to_vec())
        }
    }
}

fn sample_unitary(cp: &ConservedPair, mode: UnitaryMode, seed: Seed) -> Result<ComplexMatrix> {
    match mode {
        UnitaryMode::Conserving => assemble(&haar_random_block_unitary(cp, seed), cp),
        UnitaryMode::HaarFull => Ok(haar_unitary(cp.dim(), &mut seed.rng())),
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "a sweep needs at least one trial".into(),
        ));
    }
    Ok(())
}

/// One report per trial, ordered by trial index. Trial `t` draws its
/// unitary from stream `seed/[t, 0]` and its apparatus state from
/// `seed/[t, 1]`, so results do not depend on scheduling.
pub fn sweep(
    cp: &ConservedPair,
    psi0: &PureState,
    psi1: &PureState,
    cfg: &SweepConfig,
) -> Result<Vec<TradeoffReport>> {
    check_trials(cfg.trials)?;
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let u = sample_unitary(cp, cfg.unitary_mode, cfg.seed.derive_path(&[t, 0]))?;
            let sigma = sample_sigma(
                &cfg.sigma_mode,
                &[cp.d_app()],
                cfg.seed.derive_path(&[t, 1]),
            )?;
            let scheme = MeasurementScheme::new(psi0.clone(), psi1.clone(), sigma, u, cp.clone())?;
            evaluate_tradeoff(&scheme, cfg.tol)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Repeatability {
    pub repeatable: bool,
    /// `F(ρ0^A, ρ1^A)`
    pub apparatus_overlap: f64,
}

/// Checks whether both system states pass through the interaction
/// unchanged, i.e. `U(|ψ_i> ⊗ |Ω>) = |ψ_i> ⊗ |φ_i>`. Needs a pure `σ`.
pub fn check_repeatability(scheme: &MeasurementScheme, tol: f64) -> Result<Repeatability> {
    require_bipartite(scheme)?;
    let purity = scheme.sigma.purity();
    if purity < 1.0 - 1e-10 {
        return Err(Error::MixedApparatusState { purity });
    }
    let (rho0, rho1) = scheme.final_states()?;
    let mut repeatable = true;
    for (rho, psi) in [(&rho0, &scheme.psi0), (&rho1, &scheme.psi1)] {
        let reduced = rho.partial_trace(&[0])?;
        let kept = reduced
            .matrix()
            .expectation(psi.amplitudes(), psi.amplitudes())
            .norm();
        if reduced.purity() < 1.0 - tol || kept < 1.0 - tol {
            repeatable = false;
        }
    }
    Ok(Repeatability {
        repeatable,
        apparatus_overlap: scheme.reduced_fidelity(&[1])?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripartiteReport {
    pub lhs: f64,
    pub f_sys: f64,
    /// Fidelity of the joint apparatus + environment states.
    pub f_ae: f64,
    /// Fidelity after tracing out the environment.
    pub f_app: f64,
    pub norm_l_sys: f64,
    pub norm_l_app: f64,
    pub norm_l_env: f64,
    /// `(‖L_A‖ + ‖L_E‖) f_sys + ‖L_S‖ f_ae`
    pub rhs_joint: f64,
    pub slack_joint: f64,
    /// `(‖L_A‖ + ‖L_E‖) f_sys + ‖L_S‖ f_app`
    pub rhs_weak: f64,
    pub slack_weak: f64,
    /// `f_app - f_ae`; partial traces cannot lower the fidelity.
    pub monotonicity_gap: f64,
    /// Residual against `L_S + L_A + L_E`.
    pub conservation_residual: f64,
    pub satisfied: bool,
}

/// `L_S ⊗ 1 ⊗ 1 + 1 ⊗ L_A ⊗ 1 + 1 ⊗ 1 ⊗ L_E`
pub fn tripartite_charge(cp: &ConservedPair, l_env: &ComplexMatrix) -> ComplexMatrix {
    kron_sum(cp.l_sys(), &kron_sum(cp.l_app(), l_env))
}

/// Trade-off with an environment: the scheme's `σ` lives on
/// apparatus ⊗ environment (factors `[d_A, d_E]`) and `U` on all three.
pub fn evaluate_tripartite(
    scheme: &MeasurementScheme,
    l_env: &ComplexMatrix,
    tol: f64,
) -> Result<TripartiteReport> {
    let cp = &scheme.cp;
    let d_env = l_env.rows();
    if scheme.sigma.dims() != [cp.d_app(), d_env] {
        return Err(Error::DimensionMismatch(format!(
            "tripartite evaluation needs apparatus-environment factors [{}, {d_env}], got {:?}",
            cp.d_app(),
            scheme.sigma.dims()
        )));
    }
    if l_env.hermitian_deviation() > crate::linops::HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            deviation: l_env.hermitian_deviation(),
        });
    }
    let f = scheme.reduced_fidelities(&[&[0], &[1, 2], &[1]])?;
    let (f_sys, f_ae, f_app) = (f[0], f[1], f[2]);
    let norm_l_sys = op_norm(cp.l_sys());
    let norm_l_app = op_norm(cp.l_app());
    let norm_l_env = op_norm(l_env);
    let lhs = scheme.charge_matrix_element().norm();
    let rhs_joint = (norm_l_app + norm_l_env) * f_sys + norm_l_sys * f_ae;
    let rhs_weak = (norm_l_app + norm_l_env) * f_sys + norm_l_sys * f_app;
    let slack_joint = rhs_joint - lhs;
    let slack_weak = rhs_weak - lhs;
    let monotonicity_gap = f_app - f_ae;
    let conservation_residual =
        crate::linops::commutator_norm(&scheme.u, &tripartite_charge(cp, l_env))?;
    Ok(TripartiteReport {
        lhs,
        f_sys,
        f_ae,
        f_app,
        norm_l_sys,
        norm_l_app,
        norm_l_env,
        rhs_joint,
        slack_joint,
        rhs_weak,
        slack_weak,
        monotonicity_gap,
        conservation_residual,
        satisfied: slack_joint >= -tol && slack_weak >= -tol && monotonicity_gap >= -tol,
    })
}

/// Tripartite counterpart of [`sweep`]: unitaries are Haar per sector of
/// `L_S + L_A + L_E`, apparatus-environment states per `sigma_mode`.
pub fn tripartite_sweep(
    cp: &ConservedPair,
    l_env: &ComplexMatrix,
    psi0: &PureState,
    psi1: &PureState,
    cfg: &SweepConfig,
) -> Result<Vec<TripartiteReport>> {
    check_trials(cfg.trials)?;
    let joint = ConservedPair::new(cp.l_sys(), &kron_sum(cp.l_app(), l_env))?;
    let dims = [cp.d_app(), l_env.rows()];
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let u = sample_unitary(&joint, cfg.unitary_mode, cfg.seed.derive_path(&[t, 0]))?;
            let sigma = sample_sigma(&cfg.sigma_mode, &dims, cfg.seed.derive_path(&[t, 1]))?;
            let scheme = MeasurementScheme::new(psi0.clone(), psi1.clone(), sigma, u, cp.clone())?;
            evaluate_tripartite(&scheme, l_env, cfg.tol)
        })
        .collect()
}
