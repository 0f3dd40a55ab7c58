//! Main-problem / adversary alternation.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::formulation::build_main_problem;
use crate::money::MoneyBreakdown;
use crate::plan::{InvestmentPlan, OperationalState};
use crate::robust::adversary::AdversaryKind;
use crate::robust::sweep::adversary_sweep;
use crate::robust::uncertainty::UncertaintyBox;
use crate::robust::{RobustError, RobustOptions};
use crate::scenario::Scenario;
use crate::solver::{extract, solve, MilpSolution};

/// Optimal plan of the main problem over a scenario set.
#[derive(Debug, Clone)]
pub struct MainSolve {
    pub plan: InvestmentPlan,
    pub states: Vec<OperationalState>,
    pub money: MoneyBreakdown<f64>,
    pub solution: MilpSolution,
}

impl MainSolve {
    pub fn objective(&self) -> f64 {
        self.solution.objective
    }
}

/// Solves the planning MILP with one operational copy per scenario.
pub fn solve_main(case: &NetworkCase, scenarios: &[Scenario], opts: &RobustOptions) -> Result<MainSolve, RobustError> {
    let model = build_main_problem(case, scenarios, &opts.cone)?;
    let solution = solve(&model.instance, &opts.solve)?;
    if !solution.status.has_solution() {
        return Err(RobustError::MainProblem(solution.status));
    }
    let ex = extract(&model, &solution, case)?;
    Ok(MainSolve { plan: ex.plan, states: ex.states, money: ex.money, solution })
}

/// Adversary result recorded in the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRecord {
    pub kind: AdversaryKind,
    pub periods: Vec<usize>,
    pub fingerprint: String,
    #[serde(with = "crate::robust::dump::float_or_null")]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationAudit {
    pub iteration: usize,
    pub main_objective: f64,
    pub scenarios_in_set: usize,
    /// Distinct adversary results of the sweep, keyed by family and periods.
    pub adversaries: Vec<AdversaryRecord>,
    /// Fingerprints appended to the scenario set after this iteration.
    pub added: Vec<String>,
    /// Wall time of the iteration; kept out of serialized artifacts so they
    /// stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RobustResult {
    pub plan: InvestmentPlan,
    pub objective: f64,
    pub money: MoneyBreakdown<f64>,
    pub states: Vec<OperationalState>,
    pub scenarios: Vec<Scenario>,
    pub audit: Vec<IterationAudit>,
}

impl RobustResult {
    pub fn iterations(&self) -> usize {
        self.audit.len()
    }
}

/// Robust plan starting from the deterministic scenario alone.
pub fn robust_plan(case: &NetworkCase, ubox: &UncertaintyBox, opts: &RobustOptions) -> Result<RobustResult, RobustError> {
    robust_plan_from(case, ubox, vec![Scenario::deterministic(case)], opts)
}

/// Robust plan starting from `seed` (e.g. scenarios restored from a dump).
/// Alternates main-problem solves with adversary sweeps until no sweep finds
/// a problematic vertex.
pub fn robust_plan_from(
    case: &NetworkCase,
    ubox: &UncertaintyBox,
    seed: Vec<Scenario>,
    opts: &RobustOptions,
) -> Result<RobustResult, RobustError> {
    ubox.validate(case)?;
    if let Some(i) = seed.iter().position(|s| !s.matches(case)) {
        return Err(RobustError::SeedShape(i));
    }
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut seen = HashSet::new();
    for s in seed {
        if seen.insert(s.fingerprint.clone()) {
            scenarios.push(s);
        }
    }
    let mut audit = Vec::new();
    for iteration in 1..=opts.max_iterations {
        let started = Instant::now();
        let main = solve_main(case, &scenarios, opts)?;
        let sweep = adversary_sweep(case, &main.plan, ubox, opts)?;

        let mut adversaries: Vec<AdversaryRecord> = sweep
            .findings
            .iter()
            .map(|f| AdversaryRecord {
                kind: f.kind,
                periods: f.mask.periods(),
                fingerprint: f.scenario.fingerprint.clone(),
                residual: f.residual,
            })
            .collect();
        adversaries.dedup();

        let fresh: Vec<Scenario> =
            sweep.problematic.iter().map(|f| f.scenario.clone()).filter(|s| !seen.contains(&s.fingerprint)).collect();
        let mut entry = IterationAudit {
            iteration,
            main_objective: main.objective(),
            scenarios_in_set: scenarios.len(),
            adversaries,
            added: fresh.iter().map(|s| s.fingerprint.clone()).collect(),
            seconds: 0.0,
        };

        if sweep.problematic.is_empty() {
            entry.seconds = started.elapsed().as_secs_f64();
            audit.push(entry);
            return Ok(RobustResult {
                plan: main.plan,
                objective: main.solution.objective,
                money: main.money,
                states: main.states,
                scenarios,
                audit,
            });
        }
        if fresh.is_empty() {
            entry.seconds = started.elapsed().as_secs_f64();
            audit.push(entry);
            let residuals = sweep.problematic.iter().map(|f| f.residual).collect();
            return Err(RobustError::NoProgress { residuals, audit });
        }
        for s in fresh {
            seen.insert(s.fingerprint.clone());
            scenarios.push(s);
        }
        entry.seconds = started.elapsed().as_secs_f64();
        audit.push(entry);
    }
    Err(RobustError::IterationCap { audit })
}
