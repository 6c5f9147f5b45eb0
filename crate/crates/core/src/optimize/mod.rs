//! Derivative-free search over charge-conserving unitaries (and optionally
//! pure apparatus states) for schemes that make both systems as
//! distinguishable as possible.

pub mod simplex;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conservation::{assemble, exp_generator, ConservedPair};
use crate::error::{Error, Result};
use crate::linops::{eigh, vector_norm};
use crate::rng::Seed;
use crate::sampling::haar_vector;
use crate::scenarios::ohira_pearle_seed;
use crate::states::{DensityOperator, PureState};
use crate::way::{evaluate_tradeoff, MeasurementScheme, TradeoffReport, DEFAULT_TOL};

pub use simplex::{minimize, SimplexOptions, SimplexOutcome};

/// Quantity to minimize.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Objective {
    /// `w_sys f_sys + w_app f_app`
    WeightedFidelity { w_sys: f64, w_app: f64 },
    /// `max(f_sys, f_app)`
    MaxFidelity,
    /// `rhs - lhs`
    Slack,
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        if let Objective::WeightedFidelity { w_sys, w_app } = *self {
            if !(w_sys >= 0.0
                && w_app >= 0.0
                && w_sys.is_finite()
                && w_app.is_finite()
                && w_sys + w_app > 0.0)
            {
                return Err(Error::InvalidArgument(format!(
                    "weights must be nonnegative with a positive sum, got w_sys = {w_sys}, w_app = {w_app}"
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, report: &TradeoffReport) -> f64 {
        match *self {
            Objective::WeightedFidelity { w_sys, w_app } => {
                w_sys * report.f_sys + w_app * report.f_app
            }
            Objective::MaxFidelity => report.f_sys.max(report.f_app),
            Objective::Slack => report.slack,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub max_evals: usize,
    pub diameter_tol: f64,
    pub initial_step: f64,
    /// Also search over pure apparatus states.
    pub optimize_sigma: bool,
    pub record_trace: bool,
    pub seed: Seed,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_evals: 5000,
            diameter_tol: 1e-9,
            initial_step: 0.5,
            optimize_sigma: false,
            record_trace: false,
            seed: Seed::new(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub restart: usize,
    pub evaluation: usize,
    /// Best value of the restart so far.
    pub objective_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub objective: Objective,
    /// Generator coordinates, followed by `2 d_A` apparatus-state
    /// coordinates when the apparatus state was optimized.
    pub best_params: Vec<f64>,
    pub best_report: TradeoffReport,
    pub objective_value: f64,
    pub restarts_used: usize,
    pub evaluations: usize,
    pub best_restart: usize,
    pub seed: u64,
    pub optimize_sigma: bool,
    /// Final value of each restart, by restart index.
    pub restart_values: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
}

/// Problem data shared by every evaluation.
#[derive(Clone, Debug)]
pub struct SearchSpace<'a> {
    pub cp: &'a ConservedPair,
    pub psi0: &'a PureState,
    pub psi1: &'a PureState,
    /// Fixed apparatus state, or the starting state when it is optimized.
    pub sigma: &'a DensityOperator,
    pub optimize_sigma: bool,
}

impl SearchSpace<'_> {
    pub fn param_count(&self) -> usize {
        self.cp.param_count()
            + if self.optimize_sigma {
                2 * self.cp.d_app()
            } else {
                0
            }
    }

    pub fn scheme(&self, params: &[f64]) -> Result<MeasurementScheme> {
        if params.len() != self.param_count() {
            return Err(Error::ParameterCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let k = self.cp.param_count();
        let u = assemble(&exp_generator(self.cp, &params[..k])?, self.cp)?;
        let sigma = if self.optimize_sigma {
            sigma_from_coords(&params[k..])?
        } else {
            self.sigma.clone()
        };
        MeasurementScheme::new(
            self.psi0.clone(),
            self.psi1.clone(),
            sigma,
            u,
            self.cp.clone(),
        )
    }

    pub fn evaluate(&self, params: &[f64]) -> Result<TradeoffReport> {
        evaluate_tradeoff(&self.scheme(params)?, DEFAULT_TOL)
    }

    fn sigma_start(&self) -> Result<Vec<f64>> {
        if !self.optimize_sigma {
            return Ok(Vec::new());
        }
        let e = eigh(self.sigma.matrix())?;
        let top = e.vectors.column(e.values.len() - 1);
        Ok(top.iter().flat_map(|z| [z.re, z.im]).collect())
    }
}

/// Pure apparatus state from `(re, im)` coordinate pairs, normalized.
pub fn sigma_from_coords(coords: &[f64]) -> Result<DensityOperator> {
    let amps: Vec<C64> = coords
        .chunks_exact(2)
        .map(|p| C64::new(p[0], p[1]))
        .collect();
    let norm = vector_norm(&amps);
    if !(norm > 1e-12) || !norm.is_finite() {
        return Err(Error::InvalidState("apparatus coordinates vanish".into()));
    }
    let d = amps.len();
    Ok(PureState::new(amps.into_iter().map(|z| z / norm).collect(), vec![d])?.projector())
}

/// Rebuilds the report for recorded parameters.
pub fn evaluate_params(
    cp: &ConservedPair,
    psi0: &PureState,
    psi1: &PureState,
    sigma: &DensityOperator,
    params: &[f64],
    optimize_sigma: bool,
) -> Result<TradeoffReport> {
    SearchSpace {
        cp,
        psi0,
        psi1,
        sigma,
        optimize_sigma,
    }
    .evaluate(params)
}

struct RestartOutcome {
    params: Vec<f64>,
    value: f64,
    evaluations: usize,
    trace: Vec<f64>,
}

/// Restart 0 starts from the identity, restart 1 from the Ohira–Pearle
/// interaction when the charges are spin-z charges with a spin-1/2 system,
/// and the rest from uniform draws in `[-π, π]` (restart `r` uses stream
/// `seed/r`).
fn start_point(
    space: &SearchSpace<'_>,
    restart: usize,
    seed: Seed,
    op_seed: Option<&Vec<f64>>,
) -> Result<Vec<f64>> {
    let k = space.cp.param_count();
    let sigma_start = space.sigma_start()?;
    let generator = match (restart, op_seed) {
        (0, _) => vec![0.0; k],
        (1, Some(op)) => op.clone(),
        _ => {
            let mut rng = seed.derive(restart as u64).rng();
            let mut g: Vec<f64> = (0..k)
                .map(|_| rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI))
                .collect();
            if space.optimize_sigma {
                let v = haar_vector(space.cp.d_app(), &mut rng);
                g.extend(v.iter().flat_map(|z| [z.re, z.im]));
                return Ok(g);
            }
            g
        }
    };
    Ok(generator.into_iter().chain(sigma_start).collect())
}

fn run_restart(
    space: &SearchSpace<'_>,
    schedule: &[Objective],
    opts: &OptimizeOptions,
    restart: usize,
    op_seed: Option<&Vec<f64>>,
) -> Result<RestartOutcome> {
    let mut x = start_point(space, restart, opts.seed, op_seed)?;
    let simplex_opts = SimplexOptions {
        max_evals: opts.max_evals,
        diameter_tol: opts.diameter_tol,
        initial_step: opts.initial_step,
    };
    let mut outcome = RestartOutcome {
        params: Vec::new(),
        value: f64::INFINITY,
        evaluations: 0,
        trace: Vec::new(),
    };
    for objective in schedule {
        let out = minimize(
            |x| match space.evaluate(x) {
                Ok(report) => objective.value(&report),
                Err(_) => f64::INFINITY,
            },
            &x,
            &simplex_opts,
        );
        x = out.x;
        outcome.value = out.value;
        outcome.evaluations += out.evaluations;
        outcome.trace.extend(out.trace);
    }
    outcome.params = x;
    Ok(outcome)
}

/// Runs `opts.restarts` independent simplex searches in parallel and keeps
/// the best (lowest restart index on ties). Deterministic given the seed.
pub fn optimize_unitary(
    cp: &ConservedPair,
    psi0: &PureState,
    psi1: &PureState,
    sigma: &DensityOperator,
    objective: Objective,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    optimize_with_schedule(cp, psi0, psi1, sigma, &[objective], opts)
}

/// Like [`optimize_unitary`], but each restart minimizes the objectives of
/// `schedule` in turn, each stage starting where the previous one stopped
/// and getting its own `max_evals`. Restarts are ranked by the last
/// objective, which is the one reported.
pub fn optimize_with_schedule(
    cp: &ConservedPair,
    psi0: &PureState,
    psi1: &PureState,
    sigma: &DensityOperator,
    schedule: &[Objective],
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    let Some(&objective) = schedule.last() else {
        return Err(Error::InvalidArgument("empty objective schedule".into()));
    };
    for o in schedule {
        o.validate()?;
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument(
            "at least one restart is needed".into(),
        ));
    }
    let space = SearchSpace {
        cp,
        psi0,
        psi1,
        sigma,
        optimize_sigma: opts.optimize_sigma,
    };
    // Validates the inputs once, up front.
    space.evaluate(&start_point(&space, 0, opts.seed, None)?)?;
    let op_seed = ohira_pearle_seed(cp, psi1)?;

    let outcomes: Vec<RestartOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| run_restart(&space, schedule, opts, r, op_seed.as_ref()))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (r, o) in outcomes.iter().enumerate() {
        if o.value < outcomes[best].value {
            best = r;
        }
    }
    let best_params = outcomes[best].params.clone();
    let best_report = space.evaluate(&best_params)?;
    let trace = if opts.record_trace {
        outcomes
            .iter()
            .enumerate()
            .flat_map(|(r, o)| {
                o.trace.iter().enumerate().map(move |(e, &v)| TracePoint {
                    restart: r,
                    evaluation: e,
                    objective_value: v,
                })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(OptimizationResult {
        objective,
        objective_value: objective.value(&best_report),
        best_params,
        best_report,
        restarts_used: opts.restarts,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        best_restart: best,
        seed: opts.seed.value(),
        optimize_sigma: opts.optimize_sigma,
        restart_values: outcomes.iter().map(|o| o.value).collect(),
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub w_sys: f64,
    pub w_app: f64,
    pub f_app: f64,
    pub f_sys: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Weight ratios `w_app / w_sys` on a logarithmic grid over `[1e-3, 1e3]`.
pub fn weight_grid(n_points: usize) -> Vec<(f64, f64)> {
    (0..n_points)
        .map(|k| {
            let ratio = 10f64.powf(-3.0 + 6.0 * k as f64 / (n_points - 1) as f64);
            (1.0 / (1.0 + ratio), ratio / (1.0 + ratio))
        })
        .collect()
}

/// Empirical frontier: one weighted-fidelity optimization per grid weight
/// (point `k` uses seed `opts.seed/k`), sorted by `f_app`.
pub fn pareto_scan(
    cp: &ConservedPair,
    psi0: &PureState,
    psi1: &PureState,
    sigma: &DensityOperator,
    n_points: usize,
    opts: &OptimizeOptions,
) -> Result<Vec<ParetoPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "a scan needs at least two points, got {n_points}"
        )));
    }
    let mut points: Vec<ParetoPoint> = weight_grid(n_points)
        .into_par_iter()
        .enumerate()
        .map(|(k, (w_sys, w_app))| {
            let point_opts = OptimizeOptions {
                seed: opts.seed.derive(k as u64),
                record_trace: false,
                ..*opts
            };
            let res = optimize_unitary(
                cp,
                psi0,
                psi1,
                sigma,
                Objective::WeightedFidelity { w_sys, w_app },
                &point_opts,
            )?;
            let r = res.best_report;
            Ok(ParetoPoint {
                w_sys,
                w_app,
                f_app: r.f_app,
                f_sys: r.f_sys,
                lhs: r.lhs,
                rhs: r.rhs,
                slack: r.slack,
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| {
        a.f_app
            .total_cmp(&b.f_app)
            .then(a.f_sys.total_cmp(&b.f_sys))
    });
    Ok(points)
}
