//! Experiment configuration: one JSON document, with every field also
//! available as a kebab-case flag. Flags win over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use waybound::conservation::{parse_preset, spin_z, ConservedPair};
use waybound::linops::ComplexMatrix;
use waybound::scenarios::{build_spin_scenario, plus_state, SpinHalfScenario};
use waybound::{DensityOperator, PureState};

pub const SEED_ENV: &str = "WAYBOUND_SEED";
pub const MAX_SCALING_SPINS: usize = 6;
const MAX_SCALING_DIM: usize = 1 << 7;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl fmt::Display) -> Self {
        Self {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Complex amplitude: `re` or `re,im` on the command line, a number or
/// `[re, im]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub C64);

impl FromStr for Amplitude {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let z = match s.split_once(',') {
            Some((re, im)) => C64::new(parse(re)?, parse(im)?),
            None => C64::new(parse(s)?, 0.0),
        };
        Ok(Amplitude(z))
    }
}

impl<'de> Deserialize<'de> for Amplitude {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(
            match Raw::deserialize(d)
                .map_err(|_| serde::de::Error::custom("expected a number or [re, im]"))?
            {
                Raw::Real(re) => Amplitude(C64::new(re, 0.0)),
                Raw::Pair([re, im]) => Amplitude(C64::new(re, im)),
            },
        )
    }
}

impl Serialize for Amplitude {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

/// A charge operator: a preset name such as `spin-z(2)` or a matrix literal.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Preset(String),
    Literal(ComplexMatrix),
}

impl FromStr for MatrixSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('[') {
            serde_json::from_str(s)
                .map(MatrixSpec::Literal)
                .map_err(|e| e.to_string())
        } else {
            Ok(MatrixSpec::Preset(s.trim().to_string()))
        }
    }
}

impl MatrixSpec {
    fn resolve(&self, field: &str) -> Result<ComplexMatrix, ConfigError> {
        match self {
            MatrixSpec::Preset(name) => parse_preset(name).map_err(|e| ConfigError::new(field, e)),
            MatrixSpec::Literal(m) => Ok(m.clone()),
        }
    }
}

/// A state vector written as `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(transparent)]
pub struct VectorSpec(#[serde(with = "waybound::linops::complex_vec")] pub Vec<C64>);

impl FromStr for VectorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }
}

/// Apparatus state: `plus` (uniform superposition), `maximally-mixed`,
/// `zero` (first basis state) or a density-matrix literal.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(String),
    Literal(ComplexMatrix),
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('[') {
            serde_json::from_str(s)
                .map(StateSpec::Literal)
                .map_err(|e| e.to_string())
        } else {
            Ok(StateSpec::Preset(s.trim().to_string()))
        }
    }
}

impl StateSpec {
    fn resolve(&self, dims: &[usize]) -> Result<DensityOperator, ConfigError> {
        let d: usize = dims.iter().product();
        match self {
            StateSpec::Preset(name) => match name.as_str() {
                "plus" => {
                    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
                    Ok(PureState::new(vec![amp; d], dims.to_vec())
                        .map_err(|e| ConfigError::new("sigma", e))?
                        .projector())
                }
                "maximally-mixed" => DensityOperator::new(DensityOperator::maximally_mixed(d).matrix().clone(), dims.to_vec())
                    .map_err(|e| ConfigError::new("sigma", e)),
                "zero" => {
                    let mut amps = vec![C64::new(0.0, 0.0); d];
                    amps[0] = C64::new(1.0, 0.0);
                    Ok(PureState::new(amps, dims.to_vec()).map_err(|e| ConfigError::new("sigma", e))?.projector())
                }
                other => Err(ConfigError::new(
                    "sigma",
                    format!("unknown preset `{other}` (expected plus, maximally-mixed, zero or a matrix)"),
                )),
            },
            StateSpec::Literal(m) => {
                if m.rows() != d {
                    return Err(ConfigError::new("sigma", format!("{}x{} matrix for a {d}-dim apparatus", m.rows(), m.cols())));
                }
                DensityOperator::new(m.clone(), dims.to_vec()).map_err(|e| ConfigError::new("sigma", e))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Spin-1/2 system measured by spin-1/2 apparatus spins.
    SpinHalf,
    /// Charges and states given explicitly.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaModeArg {
    PureRandom,
    MixedRandom,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryModeArg {
    Conserving,
    HaarFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    WeightedFidelity,
    MaxFidelity,
    Slack,
    /// Weighted-fidelity optimizations over a grid of weights.
    Pareto,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// JSON configuration file; flags override its fields
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Scenario preset [default: spin-half]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    /// Amplitude of |1> in ψ1, `re` or `re,im` [default: 1/√2]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Amplitude>,
    /// Amplitude of |-1> in ψ1 [default: 1/√2]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Amplitude>,
    /// Apparatus spins in the spin-half scenario [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_apparatus_spins: Option<usize>,
    /// Environment spins for `tripartite` [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_environment_spins: Option<usize>,

    /// System charge (custom scenario): preset like `spin-z(1)` or matrix literal
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_sys: Option<MatrixSpec>,
    /// Apparatus charge (custom scenario)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_app: Option<MatrixSpec>,
    /// Environment charge (custom scenario, `tripartite`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_env: Option<MatrixSpec>,
    /// First system state (custom scenario), `[[re, im], ...]`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi0: Option<VectorSpec>,
    /// Second system state (custom scenario), orthogonal to psi0
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi1: Option<VectorSpec>,
    /// Apparatus state: plus, maximally-mixed, zero or a matrix literal [default: plus]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<StateSpec>,

    /// Apparatus states drawn per trial [default: pure-random]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_mode: Option<SigmaModeArg>,
    /// Unitaries drawn per trial [default: conserving]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary_mode: Option<UnitaryModeArg>,
    /// Sweep trials [default: 1000]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Master seed [default: $WAYBOUND_SEED or 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Violation tolerance on the slack [default: 1e-9]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    /// Optimizer restarts [default: 32]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Evaluation cap per restart, and per penalty stage in `scaling` [default: 5000]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    /// Objective to minimize [default: slack]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveKind>,
    /// Weight on the system fidelity [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_sys: Option<f64>,
    /// Weight on the apparatus fidelity [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_app: Option<f64>,
    /// Points of the Pareto scan [default: 9]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pareto_points: Option<usize>,
    /// Also optimize over pure apparatus states [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_sigma: Option<bool>,
    /// Write the per-evaluation optimizer trace [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,
    /// Largest apparatus size in the scaling study [default: 3]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_spins: Option<usize>,

    /// Output directory [default: out]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($field:ident),* $(,)?) => {
        ExperimentConfig {
            config: $top.config.or($base.config),
            $($field: $top.$field.or($base.$field),)*
        }
    };
}

impl ExperimentConfig {
    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: ExperimentConfig) -> ExperimentConfig {
        overlay!(self, base;
            scenario, alpha, beta, n_apparatus_spins, n_environment_spins,
            l_sys, l_app, l_env, psi0, psi1, sigma,
            sigma_mode, unitary_mode, trials, seed, tol,
            restarts, max_evals, objective, w_sys, w_app, pareto_points, optimize_sigma, trace, max_spins,
            out_dir, threads,
        )
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." {
                // Unknown fields are reported against the document root.
                let msg = inner.to_string();
                msg.split('`').nth(1).unwrap_or(".").to_string()
            } else {
                path
            };
            ConfigError::new(&field, inner)
        })
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Flags over the file named by `--config`, if any.
    pub fn load(flags: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
        match flags.config.clone() {
            Some(path) => Ok(flags.over(Self::from_file(&path)?)),
            None => Ok(flags),
        }
    }

    /// The configuration as recorded in output files: everything that can
    /// change results, nothing that depends on where or how it ran.
    pub fn recorded(&self) -> ExperimentConfig {
        ExperimentConfig {
            config: None,
            out_dir: None,
            threads: None,
            seed: Some(self.seed_value().unwrap_or(0)),
            ..self.clone()
        }
    }

    pub fn seed_value(&self) -> Result<u64, ConfigError> {
        if let Some(seed) = self.seed {
            return Ok(seed);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| ConfigError::new(SEED_ENV, format!("`{v}`: {e}"))),
            Err(_) => Ok(0),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn tol(&self) -> Result<f64, ConfigError> {
        let tol = self.tol.unwrap_or(waybound::way::DEFAULT_TOL);
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(ConfigError::new(
                "tol",
                format!("{tol} is not a nonnegative number"),
            ));
        }
        Ok(tol)
    }

    pub fn trials(&self) -> Result<usize, ConfigError> {
        match self.trials.unwrap_or(1000) {
            0 => Err(ConfigError::new("trials", "must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn restarts(&self) -> Result<usize, ConfigError> {
        match self.restarts.unwrap_or(32) {
            0 => Err(ConfigError::new("restarts", "must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn max_evals(&self) -> Result<usize, ConfigError> {
        match self.max_evals.unwrap_or(5000) {
            0 => Err(ConfigError::new("max_evals", "must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn amplitudes(&self) -> Result<(C64, C64), ConfigError> {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let alpha = self.alpha.map_or(h, |a| a.0);
        let beta = self.beta.map_or(h, |b| b.0);
        waybound::scenarios::check_amplitudes(alpha, beta).map_err(|e| {
            let zero = C64::new(0.0, 0.0);
            let field = if alpha == zero || (beta != zero && self.beta.is_none()) {
                "alpha"
            } else {
                "beta"
            };
            ConfigError::new(field, e)
        })?;
        Ok((alpha, beta))
    }

    fn scenario(&self) -> ScenarioKind {
        self.scenario.unwrap_or(ScenarioKind::SpinHalf)
    }

    fn reject_for_spin_half(&self) -> Result<(), ConfigError> {
        let given = [
            ("l_sys", self.l_sys.is_some()),
            ("l_app", self.l_app.is_some()),
            ("l_env", self.l_env.is_some()),
            ("psi0", self.psi0.is_some()),
            ("psi1", self.psi1.is_some()),
        ];
        match given.iter().find(|(_, set)| *set) {
            Some((field, _)) => Err(ConfigError::new(
                field,
                "only applies to the custom scenario",
            )),
            None => Ok(()),
        }
    }

    fn custom_states(&self, d_sys: usize) -> Result<(PureState, PureState), ConfigError> {
        let state = |field: &str, spec: &Option<VectorSpec>| -> Result<PureState, ConfigError> {
            let v = spec
                .as_ref()
                .ok_or_else(|| ConfigError::new(field, "required by the custom scenario"))?;
            if v.0.len() != d_sys {
                return Err(ConfigError::new(
                    field,
                    format!("{} amplitudes for a {d_sys}-dim system", v.0.len()),
                ));
            }
            PureState::from_amplitudes(v.0.clone()).map_err(|e| ConfigError::new(field, e))
        };
        let psi0 = state("psi0", &self.psi0)?;
        let psi1 = state("psi1", &self.psi1)?;
        let overlap = psi0.overlap(&psi1).norm();
        if overlap > 1e-10 {
            return Err(ConfigError::new(
                "psi1",
                format!("not orthogonal to psi0 (overlap {overlap:e})"),
            ));
        }
        Ok((psi0, psi1))
    }

    fn charge(&self, field: &str, spec: &Option<MatrixSpec>) -> Result<ComplexMatrix, ConfigError> {
        spec.as_ref()
            .ok_or_else(|| ConfigError::new(field, "required by the custom scenario"))?
            .resolve(field)
    }

    /// System states, charges and default apparatus state of the scenario.
    pub fn problem(&self) -> Result<Problem, ConfigError> {
        match self.scenario() {
            ScenarioKind::SpinHalf => {
                self.reject_for_spin_half()?;
                let (alpha, beta) = self.amplitudes()?;
                let n = self.n_apparatus_spins.unwrap_or(1);
                if n > 12 {
                    return Err(ConfigError::new(
                        "n_apparatus_spins",
                        format!("{n} spins is too many"),
                    ));
                }
                let s = SpinHalfScenario::new(alpha, beta, n, 0)
                    .map_err(|e| ConfigError::new("alpha", e))?;
                let (psi0, psi1, cp) =
                    build_spin_scenario(&s).map_err(|e| ConfigError::new("scenario", e))?;
                let sigma = match &self.sigma {
                    Some(spec) => spec.resolve(&[cp.d_app()])?,
                    None => plus_state(n),
                };
                Ok(Problem {
                    psi0,
                    psi1,
                    cp,
                    sigma,
                })
            }
            ScenarioKind::Custom => {
                let l_sys = self.charge("l_sys", &self.l_sys)?;
                let l_app = self.charge("l_app", &self.l_app)?;
                let cp =
                    ConservedPair::new(&l_sys, &l_app).map_err(|e| ConfigError::new("l_app", e))?;
                let (psi0, psi1) = self.custom_states(cp.d_sys())?;
                let sigma = self
                    .sigma
                    .clone()
                    .unwrap_or(StateSpec::Preset("plus".into()))
                    .resolve(&[cp.d_app()])?;
                Ok(Problem {
                    psi0,
                    psi1,
                    cp,
                    sigma,
                })
            }
        }
    }

    /// Environment charge for `tripartite`.
    pub fn l_env(&self) -> Result<ComplexMatrix, ConfigError> {
        match self.scenario() {
            ScenarioKind::SpinHalf => {
                let n = self.n_environment_spins.unwrap_or(1);
                if n > 6 {
                    return Err(ConfigError::new(
                        "n_environment_spins",
                        format!("{n} spins is too many"),
                    ));
                }
                Ok(spin_z(n))
            }
            ScenarioKind::Custom => self.charge("l_env", &self.l_env),
        }
    }

    /// Apparatus-environment state for a fixed-sigma tripartite sweep.
    pub fn joint_sigma(&self, d_app: usize, d_env: usize) -> Result<DensityOperator, ConfigError> {
        self.sigma
            .clone()
            .unwrap_or(StateSpec::Preset("plus".into()))
            .resolve(&[d_app, d_env])
    }

    pub fn max_spins(&self) -> Result<usize, ConfigError> {
        let n = self.max_spins.unwrap_or(3);
        if n == 0 {
            return Err(ConfigError::new("max_spins", "must be at least 1"));
        }
        if n > MAX_SCALING_SPINS || (2usize << n) > MAX_SCALING_DIM {
            return Err(ConfigError::new(
                "max_spins",
                format!("{n} exceeds the cap of {MAX_SCALING_SPINS} (total dimension at most {MAX_SCALING_DIM})"),
            ));
        }
        Ok(n)
    }
}

#[derive(Debug)]
pub struct Problem {
    pub psi0: PureState,
    pub psi1: PureState,
    pub cp: ConservedPair,
    pub sigma: DensityOperator,
}
