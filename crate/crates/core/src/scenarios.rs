//! Spin-1/2 constructions: the measured pair of states, the Ohira–Pearle
//! interaction that attains equality, and the multi-spin apparatus study.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conservation::{generator_params, spin_z, BlockUnitary, ConservedPair};
use crate::error::{Error, Result};
use crate::linops::{op_norm, tensor, ComplexMatrix};
use crate::optimize::{optimize_with_schedule, Objective, OptimizeOptions};
use crate::states::{DensityOperator, PureState};
use crate::way::{MeasurementScheme, DEFAULT_TOL};

const NORMALIZATION_TOL: f64 = 1e-12;
/// Weight on `f_app` in the scaling study's penalized objective.
pub const SCALING_PENALTY: f64 = 1e6;

/// Penalty weights stepped through by the scaling study, ending at
/// [`SCALING_PENALTY`].
pub const SCALING_PENALTY_RAMP: [f64; 6] = [1.0, 10.0, 1e2, 1e3, 1e4, SCALING_PENALTY];
const PRESET_TOL: f64 = 1e-12;

/// `|ψ1> = α|1> + β|-1>`, `|ψ0> = β̄|1> - ᾱ|-1>` measured by a register of
/// spin-1/2 particles, with an optional spin-1/2 environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpinHalfScenario {
    pub alpha: C64,
    pub beta: C64,
    pub n_apparatus_spins: usize,
    pub n_environment_spins: usize,
}

impl SpinHalfScenario {
    pub fn new(
        alpha: C64,
        beta: C64,
        n_apparatus_spins: usize,
        n_environment_spins: usize,
    ) -> Result<Self> {
        check_amplitudes(alpha, beta)?;
        Ok(Self {
            alpha,
            beta,
            n_apparatus_spins,
            n_environment_spins,
        })
    }

    /// `L_E`, the spin-z charge of the environment.
    pub fn l_env(&self) -> ComplexMatrix {
        spin_z(self.n_environment_spins)
    }
}

pub fn check_amplitudes(alpha: C64, beta: C64) -> Result<()> {
    if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidAmplitudes(format!(
            "|α|² + |β|² = {norm_sqr}, expected 1"
        )));
    }
    if alpha == C64::new(0.0, 0.0) || beta == C64::new(0.0, 0.0) {
        return Err(Error::InvalidAmplitudes(
            "both amplitudes must be nonzero".into(),
        ));
    }
    Ok(())
}

fn spin_states(alpha: C64, beta: C64) -> Result<(PureState, PureState)> {
    // Re-normalize to remove the (at most 1e-12) input error.
    let psi0 = PureState::normalized(vec![beta.conj(), -alpha.conj()], vec![2])?;
    let psi1 = PureState::normalized(vec![alpha, beta], vec![2])?;
    Ok((psi0, psi1))
}

/// `(ψ0, ψ1, pair)` with `L_S = S_z` and `L_A = Σ_k S_z^(k)`.
pub fn build_spin_scenario(s: &SpinHalfScenario) -> Result<(PureState, PureState, ConservedPair)> {
    check_amplitudes(s.alpha, s.beta)?;
    let (psi0, psi1) = spin_states(s.alpha, s.beta)?;
    let cp = ConservedPair::new(&spin_z(1), &spin_z(s.n_apparatus_spins))?;
    let element = cp.l_sys().expectation(psi0.amplitudes(), psi1.amplitudes());
    debug_assert!((element - s.alpha * s.beta).norm() < 1e-12);
    Ok((psi0, psi1, cp))
}

/// `|+>^{⊗n}`
pub fn plus_state(n: usize) -> DensityOperator {
    let d = 1usize << n;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    PureState::new(vec![amp; d], vec![d])
        .expect("uniform superposition is normalized")
        .projector()
}

/// Projector `Q0 - P` on system ⊗ one apparatus spin, where `Q0` projects
/// onto the charge-0 span `{|1,-1>, |-1,1>}` and `P` onto `α|1,-1> + β|-1,1>`.
fn charge_zero_complement(alpha: C64, beta: C64) -> ComplexMatrix {
    let mut v = vec![C64::new(0.0, 0.0); 4];
    v[1] = alpha;
    v[2] = beta;
    let norm = crate::linops::vector_norm(&v);
    v.iter_mut().for_each(|z| *z /= norm);
    let mut q0 = ComplexMatrix::zeros(4, 4);
    q0[(1, 1)] = C64::new(1.0, 0.0);
    q0[(2, 2)] = C64::new(1.0, 0.0);
    &q0 - &ComplexMatrix::outer(&v, &v)
}

/// Identity on the charge ±1 sectors and the reflection `2P - 1` on the
/// charge-0 sector, with `σ = |+><+|`.
pub fn ohira_pearle_unitary(alpha: C64, beta: C64) -> Result<(BlockUnitary, DensityOperator)> {
    check_amplitudes(alpha, beta)?;
    let cp = ConservedPair::new(&spin_z(1), &spin_z(1))?;
    let reflection =
        &ComplexMatrix::identity(4) - &charge_zero_complement(alpha, beta).scale_real(2.0);
    Ok((BlockUnitary::from_full(&reflection, &cp)?, plus_state(1)))
}

/// The spin-1/2 scenario measured with the Ohira–Pearle interaction.
pub fn ohira_pearle_scheme(alpha: C64, beta: C64) -> Result<MeasurementScheme> {
    let (psi0, psi1, cp) = build_spin_scenario(&SpinHalfScenario::new(alpha, beta, 1, 0)?)?;
    let (bu, sigma) = ohira_pearle_unitary(alpha, beta)?;
    let u = crate::conservation::assemble(&bu, &cp)?;
    MeasurementScheme::new(psi0, psi1, sigma, u, cp)
}

/// Hermitian generator `π (Q0 - P) ⊗ 1` whose exponential is the
/// Ohira–Pearle interaction between the system and the first of
/// `n_apparatus_spins` apparatus spins.
pub fn ohira_pearle_generator(
    alpha: C64,
    beta: C64,
    n_apparatus_spins: usize,
) -> Result<ComplexMatrix> {
    check_amplitudes(alpha, beta)?;
    if n_apparatus_spins == 0 {
        return Err(Error::InvalidArgument(
            "the interaction needs at least one apparatus spin".into(),
        ));
    }
    let g = charge_zero_complement(alpha, beta).scale_real(std::f64::consts::PI);
    Ok(tensor(
        &g,
        &ComplexMatrix::identity(1usize << (n_apparatus_spins - 1)),
    ))
}

fn spin_count(l_app: &ComplexMatrix) -> Option<usize> {
    let d = l_app.rows();
    if !d.is_power_of_two() || d < 2 {
        return None;
    }
    let n = d.trailing_zeros() as usize;
    ((l_app - &spin_z(n)).max_abs() <= PRESET_TOL).then_some(n)
}

/// Generator coordinates of the Ohira–Pearle interaction for `psi1`, if
/// the pair has spin-z charges on a spin-1/2 system and spin-1/2 apparatus
/// register; `None` otherwise.
pub fn ohira_pearle_seed(cp: &ConservedPair, psi1: &PureState) -> Result<Option<Vec<f64>>> {
    if cp.d_sys() != 2 || (cp.l_sys() - &spin_z(1)).max_abs() > PRESET_TOL {
        return Ok(None);
    }
    let Some(n) = spin_count(cp.l_app()) else {
        return Ok(None);
    };
    let a = psi1.amplitudes();
    if a[0].norm() < NORMALIZATION_TOL || a[1].norm() < NORMALIZATION_TOL {
        return Ok(None);
    }
    let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let g = ohira_pearle_generator(a[0] / norm, a[1] / norm, n)?;
    generator_params(cp, &g).map(Some)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub norm_l_app: f64,
    /// `|αβ| / ‖L_A‖`, the least `f_sys` compatible with `f_app = 0`.
    pub bound_floor: f64,
    pub best_f_sys: f64,
    pub best_f_app: f64,
}

/// For `n = 1..=max_spins` apparatus spins, minimizes
/// `f_sys + 10⁶ f_app` over conserving unitaries and pure apparatus states
/// (starting from `|+>^{⊗n}`), raising the penalty through
/// [`SCALING_PENALTY_RAMP`] within each restart. Row `n` uses seed
/// `opts.seed/n`; the sigma flag of `opts` is ignored.
pub fn apparatus_scaling_study(
    alpha: C64,
    beta: C64,
    max_spins: usize,
    opts: &OptimizeOptions,
) -> Result<Vec<ScalingRow>> {
    check_amplitudes(alpha, beta)?;
    if max_spins == 0 {
        return Err(Error::InvalidArgument(
            "max_spins must be at least 1".into(),
        ));
    }
    (1..=max_spins)
        .into_par_iter()
        .map(|n| {
            let (psi0, psi1, cp) = build_spin_scenario(&SpinHalfScenario::new(alpha, beta, n, 0)?)?;
            let row_opts = OptimizeOptions {
                seed: opts.seed.derive(n as u64),
                optimize_sigma: true,
                record_trace: false,
                ..*opts
            };
            let schedule: Vec<Objective> = SCALING_PENALTY_RAMP
                .iter()
                .map(|&w_app| Objective::WeightedFidelity { w_sys: 1.0, w_app })
                .collect();
            let res =
                optimize_with_schedule(&cp, &psi0, &psi1, &plus_state(n), &schedule, &row_opts)?;
            let norm_l_app = op_norm(cp.l_app());
            Ok(ScalingRow {
                n,
                norm_l_app,
                bound_floor: res.best_report.lhs / norm_l_app,
                best_f_sys: res.best_report.f_sys,
                best_f_app: res.best_report.f_app,
            })
        })
        .collect()
}

/// Violation tolerance used when reporting scenario schemes.
pub const SCENARIO_TOL: f64 = DEFAULT_TOL;
