//! Dispatches an experiment to its solver and renders trace and summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::convex::{max_flow, solve_cp, CpOptions, Rounds};
use crate::error::{invalid, Error, Result};
use crate::game::{run_bandit_match, FullInfoMatch, MatchResult, Opponent, PayoffMatrix};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::parse::{parse_graph, parse_matrix, parse_program};
use crate::harness::trace::{csv_line, fit_series, game_trace_csv};
use crate::linalg::{norm2, sub, RunningMean};
use crate::mirror::MirrorMap;
use crate::offline::{
    holder_bound, holder_optimize, mirror_prox, separable_power, OfflineRun, SmoothProblem,
};
use crate::saddle::{regret_bound_prefixes, saddle_bound, saddle_solve, SaddleProblem};

/// Final numbers of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: String,
    pub rounds: usize,
    /// Duality gap of the averaged strategies.
    pub gap: Option<f64>,
    /// Flow value or objective value.
    pub value: Option<f64>,
    pub suboptimality: Option<f64>,
    /// The theoretical guarantee the run is compared against.
    pub bound: Option<f64>,
    pub fitted_slope: Option<f64>,
    pub certificates_checked: usize,
    pub certificates_passed: usize,
    pub passed: bool,
    /// Not part of the trace, so traces stay reproducible.
    pub wall_time_seconds: f64,
}

impl Summary {
    fn new(kind: ExperimentKind, rounds: usize) -> Self {
        Self {
            kind: kind.name().to_string(),
            rounds,
            gap: None,
            value: None,
            suboptimality: None,
            bound: None,
            fitted_slope: None,
            certificates_checked: 0,
            certificates_passed: 0,
            passed: false,
            wall_time_seconds: 0.0,
        }
    }

    fn record_checks(&mut self, checked: usize, passed: usize) {
        self.certificates_checked = checked;
        self.certificates_passed = passed;
        self.passed = checked == passed;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    /// CSV trace contents.
    pub trace: String,
}

/// Runs the configured experiment without touching the filesystem beyond
/// reading its inputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let mut outcome = match config.kind {
        ExperimentKind::MirrorProx => run_mirror_prox(config)?,
        ExperimentKind::Holder => run_holder(config)?,
        ExperimentKind::Saddle => run_saddle(config)?,
        ExperimentKind::Game => run_game(config)?,
        ExperimentKind::GameBandit => run_game_bandit(config)?,
        ExperimentKind::Cvxprog => run_cvxprog(config)?,
        ExperimentKind::Maxflow => run_maxflow(config)?,
    };
    outcome.summary.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(outcome)
}

/// Summary path next to the trace: `<out>.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

/// Writes the trace to `config.out` and the summary beside it.
pub fn write_outcome(config: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    let Some(out) = &config.out else {
        return Ok(());
    };
    let io = |e: std::io::Error| invalid(format!("cannot write {}: {e}", out.display()));
    fs::write(out, &outcome.trace).map_err(io)?;
    fs::write(summary_path(out), outcome.summary.to_json() + "\n").map_err(io)?;
    Ok(())
}

fn read(path: &Option<PathBuf>, what: &str) -> Result<String> {
    let path = path
        .as_ref()
        .ok_or_else(|| invalid(format!("missing {what} path")))?;
    fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn rounds(config: &ExperimentConfig) -> Result<usize> {
    config.rounds.ok_or_else(|| invalid("missing round count"))
}

fn load_matrix(config: &ExperimentConfig) -> Result<PayoffMatrix> {
    parse_matrix(&read(&config.matrix, "matrix")?)
}

const OFFLINE_HEADER: &str = "t,eta,objective,suboptimality,bound,cert_lhs,cert_rhs\n";

/// Per-round objective of the running average and the smoothness check
/// `‖∇_t - M_t‖_* ≤ (1 + 1e-6) H ‖f_t - g_{t-1}‖^α`.
fn offline_outcome(
    kind: ExperimentKind,
    problem: &SmoothProblem,
    run: &OfflineRun,
    optimum: f64,
    bound: impl Fn(usize) -> f64,
) -> Result<Outcome> {
    let value = problem
        .value
        .as_ref()
        .ok_or_else(|| invalid("problem has no value oracle"))?;
    let map = &problem.map;
    let mut trace = String::from(OFFLINE_HEADER);
    let mut mean = RunningMean::new(map.dim());
    let mut previous = map.center()?;
    let mut passed = 0;
    let mut gaps = Vec::with_capacity(run.trajectory.len());
    for (k, step) in run.trajectory.iter().enumerate() {
        let t = k + 1;
        mean.push(&step.played);
        let objective = value(&mean.mean());
        let lhs = map.dual_norm(&sub(&step.gradient, &step.prediction));
        let dist = map.norm(&sub(&step.played, &previous));
        let power = if problem.exponent == 0.0 {
            1.0
        } else {
            dist.powf(problem.exponent)
        };
        let rhs = problem.smoothness * power;
        passed += usize::from(lhs <= (1.0 + 1e-6) * rhs + 1e-12);
        previous.clone_from(&step.secondary);
        gaps.push(objective - optimum);
        trace.push_str(&csv_line([
            t as f64,
            step.eta,
            objective,
            objective - optimum,
            bound(t),
            lhs,
            rhs,
        ]));
    }
    let t = run.trajectory.len();
    let mut summary = Summary::new(kind, t);
    summary.value = Some(value(&run.average));
    summary.suboptimality = gaps.last().copied();
    summary.bound = Some(bound(t));
    summary.fitted_slope = fit_series(&gaps);
    summary.record_checks(t, passed);
    Ok(Outcome { summary, trace })
}

fn run_mirror_prox(config: &ExperimentConfig) -> Result<Outcome> {
    let target = config.target.clone().unwrap_or_else(|| vec![0.9, 1.2]);
    let ball = config.radius.unwrap_or(1.0);
    let map = MirrorMap::euclidean_ball(target.len(), ball)?;
    let r2 = 0.5 * ball * ball;
    let optimum = 0.5 * (norm2(&target) - ball).max(0.0).powi(2);
    let problem = separable_power(map, target, 1.0, r2.sqrt())?;
    let run = mirror_prox(&problem, rounds(config)?)?;
    let h = problem.smoothness;
    offline_outcome(ExperimentKind::MirrorProx, &problem, &run, optimum, |t| {
        h * r2 / t as f64
    })
}

fn run_holder(config: &ExperimentConfig) -> Result<Outcome> {
    let alpha = config.alpha.ok_or_else(|| invalid("missing alpha"))?;
    let target = config.target.clone().unwrap_or_else(|| vec![0.5, 0.3, 0.2]);
    let total: f64 = target.iter().sum();
    if target.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(invalid("holder target must be a probability vector"));
    }
    let d = target.len();
    let radius = config.radius.unwrap_or_else(|| (d as f64).ln().sqrt());
    let problem = separable_power(MirrorMap::entropy(d)?, target, alpha, radius)?;
    let t = rounds(config)?;
    let run = holder_optimize(&problem, t)?;
    let h = problem.smoothness;
    let bound = holder_bound(radius, h, alpha, t);
    offline_outcome(ExperimentKind::Holder, &problem, &run, 0.0, |_| bound)
}

fn run_saddle(config: &ExperimentConfig) -> Result<Outcome> {
    let a = load_matrix(config)?;
    let problem = SaddleProblem::bilinear(&a);
    let t = rounds(config)?;
    let result = saddle_solve(&problem, t)?;
    let bounds = regret_bound_prefixes(&problem, &result.trace, result.eta_f, result.eta_x)?;
    let mut trace = String::from("t,eta,gap,regret_bound\n");
    let mut passed = 0;
    let mut gaps = Vec::with_capacity(t);
    for (round, bound) in result.trace.iter().zip(&bounds) {
        let gap = round
            .running_gap
            .expect("bilinear problems have a gap oracle");
        passed += usize::from(gap <= bound + 1e-9 * bound.abs().max(1.0));
        gaps.push(gap);
        trace.push_str(&csv_line([round.t as f64, result.eta_f, gap, *bound]));
    }
    let mut summary = Summary::new(ExperimentKind::Saddle, t);
    summary.gap = Some(result.gap.value());
    summary.bound = Some(saddle_bound(
        problem.radius_f,
        problem.radius_x,
        problem.smoothness_max(),
        problem.gamma(),
        t,
    ));
    summary.fitted_slope = fit_series(&gaps);
    summary.record_checks(t, passed);
    Ok(Outcome { summary, trace })
}

/// `(6 + 22 ln(n m T⁴) + 40/T) / T`
pub fn game_gap_bound(n: usize, m: usize, rounds: usize) -> f64 {
    let t = rounds as f64;
    (6.0 + 22.0 * (n as f64 * m as f64 * t.powi(4)).ln() + 40.0 / t) / t
}

fn match_outcome(
    kind: ExperimentKind,
    a: &PayoffMatrix,
    result: &MatchResult,
    passed: usize,
) -> Outcome {
    let t = result.trace.len();
    let gaps: Vec<f64> = result.trace.iter().map(|r| r.gap).collect();
    let mut summary = Summary::new(kind, t);
    summary.gap = Some(result.gap);
    summary.value = Some(a.value(&result.f_bar, &result.x_bar));
    summary.bound = Some(game_gap_bound(a.rows(), a.cols(), t));
    summary.fitted_slope = fit_series(&gaps);
    summary.record_checks(t, passed);
    Outcome {
        summary,
        trace: game_trace_csv(&result.trace),
    }
}

fn run_game(config: &ExperimentConfig) -> Result<Outcome> {
    let a = load_matrix(config)?;
    let mut game = FullInfoMatch::new(&a, rounds(config)?, Opponent::Adaptive, config.mixing)?;
    let mut passed = 0;
    let mut rows = Vec::new();
    while !game.is_finished() {
        rows.push(game.step()?.row);
        let col_ok = game.column_certificate().is_some_and(|c| c.holds());
        passed += usize::from(game.row_certificate().holds() && col_ok);
    }
    let result = game.finish()?;
    let result = MatchResult {
        trace: rows,
        ..result
    };
    Ok(match_outcome(ExperimentKind::Game, &a, &result, passed))
}

fn run_game_bandit(config: &ExperimentConfig) -> Result<Outcome> {
    let a = load_matrix(config)?;
    let t = rounds(config)?;
    let result = run_bandit_match(&a, t, config.delta, config.seed)?;
    let row_cap = crate::game::bandit_eta_cap(a.cols(), t);
    let col_cap = crate::game::bandit_eta_cap(a.rows(), t);
    // prefix counts are exact only at the end, so count rounds whose trace
    // entries satisfy the certificate and the step-size caps
    let passed = result
        .trace
        .iter()
        .filter(|r| {
            let ok = |lhs: f64, rhs: f64| lhs <= rhs + 1e-9 * rhs.abs().max(1.0);
            ok(r.cert_lhs_row, r.cert_rhs_row)
                && ok(r.cert_lhs_col, r.cert_rhs_col)
                && r.eta_row <= row_cap
                && r.eta_col <= col_cap
        })
        .count();
    Ok(match_outcome(
        ExperimentKind::GameBandit,
        &a,
        &result,
        passed,
    ))
}

fn run_cvxprog(config: &ExperimentConfig) -> Result<Outcome> {
    let problem = parse_program(&read(&config.program, "program")?)?;
    let epsilon = config.epsilon.ok_or_else(|| invalid("missing epsilon"))?;
    let rounds = config.rounds.map_or(Rounds::Auto, Rounds::Fixed);
    let solution = solve_cp(&problem, epsilon, rounds, CpOptions::default())?;
    let mut trace = String::from("index,f_hat\n");
    for (i, v) in solution.f_hat.iter().enumerate() {
        trace.push_str(&csv_line([i.to_string(), v.to_string()]));
    }
    let report = &solution.report;
    let mut summary = Summary::new(ExperimentKind::Cvxprog, report.rounds_run);
    summary.value = Some(report.objective);
    summary.bound = Some((1.0 - epsilon / problem.gamma()) * problem.target());
    summary.record_checks(1, usize::from(report.feasible && report.objective_ok));
    Ok(Outcome { summary, trace })
}

/// Tolerance on capacities and conservation of a returned flow.
pub const FLOW_TOL: f64 = 1e-7;

fn run_maxflow(config: &ExperimentConfig) -> Result<Outcome> {
    let network = parse_graph(&read(&config.graph, "graph")?)?;
    let epsilon = config.epsilon.ok_or_else(|| invalid("missing epsilon"))?;
    let solution = max_flow(&network, epsilon)?;
    let mut trace = String::from("edge_index,u,v,flow\n");
    for (e, (&(u, v), f)) in network.edges().iter().zip(&solution.flows).enumerate() {
        trace.push_str(&csv_line([
            (e + 1).to_string(),
            (u + 1).to_string(),
            (v + 1).to_string(),
            f.to_string(),
        ]));
    }
    trace.push_str(&csv_line(["value".to_string(), solution.value.to_string()]));
    let mut summary = Summary::new(ExperimentKind::Maxflow, solution.total_rounds());
    summary.value = Some(solution.value);
    let ok = solution.max_violation <= FLOW_TOL && solution.conservation_residual <= FLOW_TOL;
    summary.record_checks(1, usize::from(ok));
    Ok(Outcome { summary, trace })
}

/// Exit status for a finished experiment: 0 when every certificate passed.
pub fn exit_status(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(outcome) if outcome.summary.passed => 0,
        Ok(_) => 1,
        Err(Error::Parse { .. } | Error::InvalidInput(_)) => 2,
        Err(_) => 2,
    }
}
