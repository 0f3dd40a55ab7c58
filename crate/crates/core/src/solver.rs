//! Solving [`MilpInstance`]s through an external backend.
//!
//! Everything backend-specific lives in this file; the rest of the crate only
//! sees [`SolveOptions`], [`MilpSolution`] and [`SolveError`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::NetworkCase;
use crate::formulation::{ObjectiveKind, PlanningModel};
use crate::milp::{MilpInstance, Sense, VarKind};
use crate::money::{npv_expected, MoneyBreakdown, MoneyError};
use crate::plan::{InvestmentPlan, OperationalState, PlanError};

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Highs,
}

impl FromStr for Backend {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            other => Err(SolveError::Unavailable(other.to_string())),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Highs => f.write_str("highs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    /// Relative MIP gap at which branch-and-bound stops.
    pub mip_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub threads: u32,
    /// 0 is silent; anything larger lets the backend print its log.
    pub verbosity: u8,
    /// When set, the backend log of each solve is written to this file.
    pub log_path: Option<PathBuf>,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            backend: Backend::Highs,
            mip_gap: 1e-6,
            time_limit: 600.0,
            threads: 1,
            verbosity: 0,
            log_path: None,
            feasibility_tol: 1e-7,
            integrality_tol: INTEGRALITY_TOL,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.mip_gap >= 0.0) {
            return Err(SolveError::Options(format!("mip_gap must be >= 0, got {}", self.mip_gap)));
        }
        if !(self.time_limit > 0.0) {
            return Err(SolveError::Options(format!("time_limit must be > 0, got {}", self.time_limit)));
        }
        if self.threads == 0 {
            return Err(SolveError::Options("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    TimeLimit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective recomputed from `values` (includes the expression constant).
    pub objective: f64,
    pub values: Vec<f64>,
    pub gap: f64,
    pub solve_time: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solver backend '{0}' is not available (supported: highs)")]
    Unavailable(String),
    #[error("invalid solve options: {0}")]
    Options(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("backend error: {0}")]
    Backend(String),
}

/// Solves `instance`; infeasibility and unboundedness are statuses, not errors.
pub fn solve(instance: &MilpInstance, opts: &SolveOptions) -> Result<MilpSolution, SolveError> {
    opts.validate()?;
    instance.check_well_formed().map_err(SolveError::Malformed)?;
    match opts.backend {
        Backend::Highs => solve_highs(instance, opts),
    }
}

fn solve_highs(instance: &MilpInstance, opts: &SolveOptions) -> Result<MilpSolution, SolveError> {
    let start = Instant::now();
    let mut obj = vec![0.0; instance.num_vars()];
    for &(v, c) in &instance.objective.terms {
        obj[v.0] += c;
    }
    let mut pb = RowProblem::new();
    let cols: Vec<_> = instance
        .vars
        .iter()
        .zip(&obj)
        .map(|(v, &c)| match v.kind {
            VarKind::Continuous => pb.add_column(c, v.lo..=v.hi),
            VarKind::Binary | VarKind::Integer => pb.add_integer_column(c, v.lo..=v.hi),
        })
        .collect();
    for r in &instance.rows {
        let factors: Vec<_> = r.coeffs.iter().map(|&(v, c)| (cols[v.0], c)).collect();
        pb.add_row(r.lo..=r.hi, factors);
    }
    if instance.num_vars() == 0 {
        // The backend refuses empty models; the answer is the constant.
        let feasible = instance.rows.iter().all(|r| r.lo <= FEASIBILITY_TOL && r.hi >= -FEASIBILITY_TOL);
        return Ok(MilpSolution {
            status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            objective: instance.objective.constant,
            values: Vec::new(),
            gap: 0.0,
            solve_time: start.elapsed().as_secs_f64(),
        });
    }
    let sense = match instance.sense {
        Sense::Minimize => highs::Sense::Minimise,
        Sense::Maximize => highs::Sense::Maximise,
    };
    let mut model = pb.try_optimise(sense).map_err(|s| SolveError::Backend(format!("load failed: {s:?}")))?;
    model.make_quiet();
    let set = |model: &mut highs::Model, key: &str, value: f64| {
        model
            .try_set_option(key, value)
            .map_err(|s| SolveError::Backend(format!("option {key}: {s:?}")))
    };
    set(&mut model, "mip_rel_gap", opts.mip_gap)?;
    set(&mut model, "time_limit", opts.time_limit)?;
    set(&mut model, "primal_feasibility_tolerance", opts.feasibility_tol)?;
    set(&mut model, "mip_feasibility_tolerance", opts.feasibility_tol.min(opts.integrality_tol))?;
    model
        .try_set_option("threads", opts.threads as i32)
        .map_err(|s| SolveError::Backend(format!("option threads: {s:?}")))?;
    model
        .try_set_option("random_seed", 0)
        .map_err(|s| SolveError::Backend(format!("option random_seed: {s:?}")))?;
    if opts.verbosity > 0 {
        model.set_option("output_flag", true);
        model.set_option("log_to_console", true);
    }
    if let Some(path) = &opts.log_path {
        let path = path.to_string_lossy().into_owned();
        model.set_option("output_flag", true);
        model.set_option("log_to_console", opts.verbosity > 0);
        model
            .try_set_option("log_file", path.as_str())
            .map_err(|s| SolveError::Backend(format!("option log_file: {s:?}")))?;
    }
    let solved = model.try_solve().map_err(|s| SolveError::Backend(format!("run failed: {s:?}")))?;
    let raw = solved.status();
    let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
    let status = match raw {
        HighsModelStatus::Optimal => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Unbounded,
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt => {
            if has_primal {
                SolveStatus::Feasible
            } else {
                SolveStatus::TimeLimit
            }
        }
        other => return Err(SolveError::Backend(format!("unexpected model status {other:?}"))),
    };
    let values = if has_primal { solved.get_solution().columns().to_vec() } else { Vec::new() };
    let objective = if values.is_empty() { f64::NAN } else { instance.objective.eval(&values) };
    let gap = if instance.is_mip() && has_primal { solved.mip_gap().max(0.0) } else { 0.0 };
    Ok(MilpSolution {
        status,
        objective,
        values,
        gap: if gap.is_finite() { gap } else { 0.0 },
        solve_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("no solution to extract (status {0:?})")]
    NoSolution(SolveStatus),
    #[error("variable {name} = {value} is not integral within {tol}")]
    Integrality { name: String, value: f64, tol: f64 },
    #[error("extracted plan is invalid: {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Money(#[from] MoneyError),
    #[error("solver objective {objective} disagrees with recomputed NPV {npv}")]
    Objective { objective: f64, npv: f64 },
}

/// Typed view of a solved planning or operational model.
#[derive(Debug, Clone)]
pub struct Extracted {
    pub plan: InvestmentPlan,
    /// One operating point per scenario of the model.
    pub states: Vec<OperationalState>,
    pub money: MoneyBreakdown<f64>,
}

/// Rounds integer variables (refusing values further than the integrality
/// tolerance from an integer), validates the plan and, for NPV models over the
/// whole horizon, checks the objective against an independent recomputation.
pub fn extract(model: &PlanningModel, solution: &MilpSolution, case: &NetworkCase) -> Result<Extracted, ExtractError> {
    if !solution.status.has_solution() {
        return Err(ExtractError::NoSolution(solution.status));
    }
    let values = &solution.values;
    for (v, x) in model.instance.vars.iter().zip(values) {
        if v.kind != VarKind::Continuous && (x - x.round()).abs() > INTEGRALITY_TOL {
            return Err(ExtractError::Integrality { name: v.name.clone(), value: *x, tol: INTEGRALITY_TOL });
        }
    }
    let plan = model.plan_from(case, values);
    plan.validate(case)?;
    let states: Vec<OperationalState> = (0..model.scenarios.len()).map(|s| model.state_from(case, s, values)).collect();
    let refs: Vec<&OperationalState> = states.iter().collect();
    let money = npv_expected::<f64>(case, &plan, &refs)?;
    if model.objective == ObjectiveKind::Npv && model.periods.len() == case.total_periods() {
        let objective = solution.objective;
        if (objective - money.npv).abs() > 1e-6 * (1.0 + objective.abs()) {
            return Err(ExtractError::Objective { objective, npv: money.npv });
        }
    }
    Ok(Extracted { plan, states, money })
}
