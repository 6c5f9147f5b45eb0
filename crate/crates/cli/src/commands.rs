use std::time::Instant;

use serde::Serialize;

use waybound::optimize::{
    optimize_unitary, pareto_scan, Objective, OptimizationResult, OptimizeOptions, ParetoPoint,
};
use waybound::scenarios::{
    apparatus_scaling_study, check_amplitudes, ohira_pearle_scheme, ScalingRow,
};
use waybound::way::{
    check_repeatability, evaluate_tradeoff, sweep, tripartite_sweep, Repeatability, SigmaMode,
    SweepConfig, TradeoffReport, TripartiteReport, UnitaryMode,
};
use waybound::Seed;

use crate::config::{
    ConfigError, ExperimentConfig, ObjectiveKind, ScenarioKind, SigmaModeArg, UnitaryModeArg,
};
use crate::output::{fmt17, OutDir};
use crate::CliError;

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ViolationFound,
}

pub const REPORT_FIELDS: [&str; 10] = [
    "trial",
    "lhs",
    "f_sys",
    "f_app",
    "norm_l_sys",
    "norm_l_app",
    "rhs",
    "slack",
    "conservation_residual",
    "satisfied",
];

pub const TRIPARTITE_FIELDS: [&str; 15] = [
    "trial",
    "lhs",
    "f_sys",
    "f_ae",
    "f_app",
    "norm_l_sys",
    "norm_l_app",
    "norm_l_env",
    "rhs_joint",
    "slack_joint",
    "rhs_weak",
    "slack_weak",
    "monotonicity_gap",
    "conservation_residual",
    "satisfied",
];

pub const FRONTIER_FIELDS: [&str; 7] = ["w_sys", "w_app", "f_app", "f_sys", "lhs", "rhs", "slack"];
pub const SCALING_FIELDS: [&str; 5] =
    ["n", "norm_l_app", "bound_floor", "best_f_sys", "best_f_app"];
pub const TRACE_FIELDS: [&str; 3] = ["restart", "evaluation", "objective_value"];

fn sigma_mode(
    cfg: &ExperimentConfig,
    fixed: impl FnOnce() -> Result<waybound::DensityOperator, ConfigError>,
) -> Result<SigmaMode, ConfigError> {
    Ok(match cfg.sigma_mode.unwrap_or(SigmaModeArg::PureRandom) {
        SigmaModeArg::PureRandom => SigmaMode::PureRandom,
        SigmaModeArg::MixedRandom => SigmaMode::MixedRandom,
        SigmaModeArg::Fixed => SigmaMode::Fixed(fixed()?),
    })
}

fn sweep_config(cfg: &ExperimentConfig, sigma_mode: SigmaMode) -> Result<SweepConfig, ConfigError> {
    Ok(SweepConfig {
        trials: cfg.trials()?,
        seed: Seed::new(cfg.seed_value()?),
        sigma_mode,
        unitary_mode: match cfg.unitary_mode.unwrap_or(UnitaryModeArg::Conserving) {
            UnitaryModeArg::Conserving => UnitaryMode::Conserving,
            UnitaryModeArg::HaarFull => UnitaryMode::HaarFull,
        },
        tol: cfg.tol()?,
    })
}

fn report_row(trial: usize, r: &TradeoffReport) -> Vec<String> {
    vec![
        trial.to_string(),
        fmt17(r.lhs),
        fmt17(r.f_sys),
        fmt17(r.f_app),
        fmt17(r.norm_l_sys),
        fmt17(r.norm_l_app),
        fmt17(r.rhs),
        fmt17(r.slack),
        fmt17(r.conservation_residual),
        r.satisfied.to_string(),
    ]
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    trial: usize,
    #[serde(flatten)]
    report: &'a TradeoffReport,
    applicable: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    config: ExperimentConfig,
    trials: usize,
    min_slack: f64,
    /// Reports with slack below `-tol`.
    violation_count: usize,
    /// Violations among reports whose unitary conserved the charge.
    theorem_violation_count: usize,
    not_applicable_count: usize,
    max_conservation_residual: f64,
    max_charge_identity_residual_applicable: f64,
}

fn fold_max(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Status, CliError> {
    let problem = cfg.problem()?;
    let mode = sigma_mode(cfg, || Ok(problem.sigma.clone()))?;
    let sweep_cfg = sweep_config(cfg, mode)?;
    let out = OutDir::create(&cfg.out_dir())?;

    let start = Instant::now();
    let reports = sweep(&problem.cp, &problem.psi0, &problem.psi1, &sweep_cfg)?;
    let elapsed = start.elapsed();

    let summary = VerifySummary {
        config: cfg.recorded(),
        trials: reports.len(),
        min_slack: reports
            .iter()
            .map(|r| r.slack)
            .fold(f64::INFINITY, f64::min),
        violation_count: reports.iter().filter(|r| !r.satisfied).count(),
        theorem_violation_count: reports.iter().filter(|r| r.is_theorem_violation()).count(),
        not_applicable_count: reports.iter().filter(|r| !r.applicable()).count(),
        max_conservation_residual: fold_max(reports.iter().map(|r| r.conservation_residual)),
        max_charge_identity_residual_applicable: fold_max(
            reports
                .iter()
                .filter(|r| r.applicable())
                .map(|r| r.charge_identity_residual),
        ),
    };
    out.write_csv(
        "verify_reports.csv",
        &REPORT_FIELDS,
        reports.iter().enumerate().map(|(t, r)| report_row(t, r)),
    )?;
    let records: Vec<ReportRecord<'_>> = reports
        .iter()
        .enumerate()
        .map(|(trial, report)| ReportRecord {
            trial,
            report,
            applicable: report.applicable(),
        })
        .collect();
    out.write_json("verify_reports.json", &records)?;
    out.write_json("verify_summary.json", &summary)?;

    println!(
        "trials {}  min slack {}  violations {}  (not applicable {}, theorem violations {})",
        summary.trials,
        fmt17(summary.min_slack),
        summary.violation_count,
        summary.not_applicable_count,
        summary.theorem_violation_count
    );
    eprintln!("wall time {:.3} s", elapsed.as_secs_f64());
    Ok(if summary.violation_count == 0 {
        Status::Ok
    } else {
        Status::ViolationFound
    })
}

#[derive(Serialize)]
struct ExampleRecord<'a> {
    config: ExperimentConfig,
    alpha: [f64; 2],
    beta: [f64; 2],
    report: &'a TradeoffReport,
    repeatability: Repeatability,
}

const EXAMPLE_EQUALITY_TOL: f64 = 1e-9;

pub fn cmd_example(cfg: &ExperimentConfig) -> Result<Status, CliError> {
    if cfg.scenario == Some(ScenarioKind::Custom) {
        return Err(ConfigError::new("scenario", "the example is the spin-half scenario").into());
    }
    if cfg.n_apparatus_spins.is_some_and(|n| n != 1) {
        return Err(ConfigError::new(
            "n_apparatus_spins",
            "the example uses a single apparatus spin",
        )
        .into());
    }
    let (alpha, beta) = cfg.amplitudes()?;
    check_amplitudes(alpha, beta).map_err(|e| ConfigError::new("alpha", e))?;
    let out = OutDir::create(&cfg.out_dir())?;
    let scheme = ohira_pearle_scheme(alpha, beta)?;
    let report = evaluate_tradeoff(&scheme, cfg.tol()?)?;
    let repeatability = check_repeatability(&scheme, cfg.tol()?)?;

    for (name, value) in [
        ("lhs", report.lhs),
        ("f_sys", report.f_sys),
        ("f_app", report.f_app),
        ("norm_l_sys", report.norm_l_sys),
        ("norm_l_app", report.norm_l_app),
        ("rhs", report.rhs),
        ("slack", report.slack),
        ("conservation_residual", report.conservation_residual),
    ] {
        println!("{name:<22} {}", fmt17(value));
    }
    println!("{:<22} {}", "satisfied", report.satisfied);
    println!("{:<22} {}", "repeatable", repeatability.repeatable);

    out.write_json(
        "example_report.json",
        &ExampleRecord {
            config: cfg.recorded(),
            alpha: [alpha.re, alpha.im],
            beta: [beta.re, beta.im],
            report: &report,
            repeatability,
        },
    )?;
    if report.slack.abs() <= EXAMPLE_EQUALITY_TOL {
        Ok(Status::Ok)
    } else {
        eprintln!("equality missed: slack {}", fmt17(report.slack));
        Ok(Status::ViolationFound)
    }
}

fn optimize_options(cfg: &ExperimentConfig) -> Result<OptimizeOptions, ConfigError> {
    Ok(OptimizeOptions {
        restarts: cfg.restarts()?,
        max_evals: cfg.max_evals()?,
        optimize_sigma: cfg.optimize_sigma.unwrap_or(false),
        record_trace: cfg.trace.unwrap_or(false),
        seed: Seed::new(cfg.seed_value()?),
        ..OptimizeOptions::default()
    })
}

#[derive(Serialize)]
struct OptimizeRecord<'a> {
    config: ExperimentConfig,
    result: &'a OptimizationResult,
}

#[derive(Serialize)]
struct ParetoRecord<'a> {
    config: ExperimentConfig,
    points: &'a [ParetoPoint],
}

pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<Status, CliError> {
    let problem = cfg.problem()?;
    let opts = optimize_options(cfg)?;
    let tol = cfg.tol()?;
    let kind = cfg.objective.unwrap_or(ObjectiveKind::Slack);
    let out = OutDir::create(&cfg.out_dir())?;

    if kind == ObjectiveKind::Pareto {
        let n_points = cfg.pareto_points.unwrap_or(9);
        if n_points < 2 {
            return Err(ConfigError::new("pareto_points", "must be at least 2").into());
        }
        let points = pareto_scan(
            &problem.cp,
            &problem.psi0,
            &problem.psi1,
            &problem.sigma,
            n_points,
            &opts,
        )?;
        out.write_csv(
            "frontier.csv",
            &FRONTIER_FIELDS,
            points.iter().map(|p| {
                [p.w_sys, p.w_app, p.f_app, p.f_sys, p.lhs, p.rhs, p.slack]
                    .into_iter()
                    .map(fmt17)
                    .collect()
            }),
        )?;
        out.write_json(
            "pareto.json",
            &ParetoRecord {
                config: cfg.recorded(),
                points: &points,
            },
        )?;
        for p in &points {
            println!(
                "f_app {}  f_sys {}  slack {}",
                fmt17(p.f_app),
                fmt17(p.f_sys),
                fmt17(p.slack)
            );
        }
        let violated = points.iter().any(|p| p.slack < -tol);
        return Ok(if violated {
            Status::ViolationFound
        } else {
            Status::Ok
        });
    }

    let objective = match kind {
        ObjectiveKind::WeightedFidelity => {
            let o = Objective::WeightedFidelity {
                w_sys: cfg.w_sys.unwrap_or(1.0),
                w_app: cfg.w_app.unwrap_or(1.0),
            };
            o.validate().map_err(|e| ConfigError::new("w_app", e))?;
            o
        }
        ObjectiveKind::MaxFidelity => Objective::MaxFidelity,
        ObjectiveKind::Slack => Objective::Slack,
        ObjectiveKind::Pareto => unreachable!("handled above"),
    };
    let result = optimize_unitary(
        &problem.cp,
        &problem.psi0,
        &problem.psi1,
        &problem.sigma,
        objective,
        &opts,
    )?;
    out.write_json(
        "optimization.json",
        &OptimizeRecord {
            config: cfg.recorded(),
            result: &result,
        },
    )?;
    if opts.record_trace {
        out.write_csv(
            "trace.csv",
            &TRACE_FIELDS,
            result.trace.iter().map(|t| {
                vec![
                    t.restart.to_string(),
                    t.evaluation.to_string(),
                    fmt17(t.objective_value),
                ]
            }),
        )?;
    }
    let r = &result.best_report;
    println!(
        "objective {}  f_sys {}  f_app {}  slack {}  (restart {} of {}, {} evaluations)",
        fmt17(result.objective_value),
        fmt17(r.f_sys),
        fmt17(r.f_app),
        fmt17(r.slack),
        result.best_restart,
        result.restarts_used,
        result.evaluations
    );
    Ok(if r.slack < -tol {
        Status::ViolationFound
    } else {
        Status::Ok
    })
}

pub fn cmd_scaling(cfg: &ExperimentConfig) -> Result<Status, CliError> {
    if cfg.scenario == Some(ScenarioKind::Custom) {
        return Err(ConfigError::new(
            "scenario",
            "the scaling study is built on the spin-half scenario",
        )
        .into());
    }
    let (alpha, beta) = cfg.amplitudes()?;
    let max_spins = cfg.max_spins()?;
    let opts = optimize_options(cfg)?;
    let tol = cfg.tol()?;
    let out = OutDir::create(&cfg.out_dir())?;
    let rows = apparatus_scaling_study(alpha, beta, max_spins, &opts)?;
    out.write_csv(
        "scaling.csv",
        &SCALING_FIELDS,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt17(r.norm_l_app),
                fmt17(r.bound_floor),
                fmt17(r.best_f_sys),
                fmt17(r.best_f_app),
            ]
        }),
    )?;
    for r in &rows {
        println!(
            "n {}  floor {}  best f_sys {}  best f_app {}",
            r.n,
            fmt17(r.bound_floor),
            fmt17(r.best_f_sys),
            fmt17(r.best_f_app)
        );
    }
    Ok(if rows.iter().any(|r| below_floor(r, tol)) {
        Status::ViolationFound
    } else {
        Status::Ok
    })
}

/// `f_sys ≥ (|αβ| - ‖L_S‖ f_app) / ‖L_A‖` with `‖L_S‖ = 1/2`.
fn below_floor(r: &ScalingRow, tol: f64) -> bool {
    r.best_f_sys < r.bound_floor - 0.5 * r.best_f_app / r.norm_l_app - tol
}

#[derive(Serialize)]
struct TripartiteRecord<'a> {
    trial: usize,
    #[serde(flatten)]
    report: &'a TripartiteReport,
}

#[derive(Serialize)]
struct TripartiteSummary {
    config: ExperimentConfig,
    trials: usize,
    min_slack_joint: f64,
    min_slack_weak: f64,
    min_monotonicity_gap: f64,
    violation_count: usize,
    max_conservation_residual: f64,
}

pub fn cmd_tripartite(cfg: &ExperimentConfig) -> Result<Status, CliError> {
    let problem = cfg.problem()?;
    let l_env = cfg.l_env()?;
    let (d_app, d_env) = (problem.cp.d_app(), l_env.rows());
    let mode = sigma_mode(cfg, || cfg.joint_sigma(d_app, d_env))?;
    let sweep_cfg = sweep_config(cfg, mode)?;
    let out = OutDir::create(&cfg.out_dir())?;

    let start = Instant::now();
    let reports = tripartite_sweep(
        &problem.cp,
        &l_env,
        &problem.psi0,
        &problem.psi1,
        &sweep_cfg,
    )?;
    let elapsed = start.elapsed();

    let min = |f: fn(&TripartiteReport) -> f64| reports.iter().map(f).fold(f64::INFINITY, f64::min);
    let summary = TripartiteSummary {
        config: cfg.recorded(),
        trials: reports.len(),
        min_slack_joint: min(|r| r.slack_joint),
        min_slack_weak: min(|r| r.slack_weak),
        min_monotonicity_gap: min(|r| r.monotonicity_gap),
        violation_count: reports.iter().filter(|r| !r.satisfied).count(),
        max_conservation_residual: fold_max(reports.iter().map(|r| r.conservation_residual)),
    };
    out.write_csv(
        "tripartite_reports.csv",
        &TRIPARTITE_FIELDS,
        reports.iter().enumerate().map(|(t, r)| {
            let mut row = vec![t.to_string()];
            row.extend(
                [
                    r.lhs,
                    r.f_sys,
                    r.f_ae,
                    r.f_app,
                    r.norm_l_sys,
                    r.norm_l_app,
                    r.norm_l_env,
                    r.rhs_joint,
                    r.slack_joint,
                    r.rhs_weak,
                    r.slack_weak,
                    r.monotonicity_gap,
                    r.conservation_residual,
                ]
                .into_iter()
                .map(fmt17),
            );
            row.push(r.satisfied.to_string());
            row
        }),
    )?;
    let records: Vec<TripartiteRecord<'_>> = reports
        .iter()
        .enumerate()
        .map(|(trial, report)| TripartiteRecord { trial, report })
        .collect();
    out.write_json("tripartite_reports.json", &records)?;
    out.write_json("tripartite_summary.json", &summary)?;
    println!(
        "trials {}  min joint slack {}  min weak slack {}  violations {}",
        summary.trials,
        fmt17(summary.min_slack_joint),
        fmt17(summary.min_slack_weak),
        summary.violation_count
    );
    eprintln!("wall time {:.3} s", elapsed.as_secs_f64());
    Ok(if summary.violation_count == 0 {
        Status::Ok
    } else {
        Status::ViolationFound
    })
}
