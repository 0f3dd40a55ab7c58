//! Fixed-plan corrective problems and the adversaries that maximise them.

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::formulation::{build, ModelSpec, PlanningModel};
use crate::plan::{InvestmentPlan, OperationalState};
use crate::robust::dual::{dualize, ParametricRow};
use crate::robust::uncertainty::{Coordinate, TargetMask, UncertaintyBox};
use crate::robust::{RobustError, RobustOptions};
use crate::scenario::{Scenario, ScenarioOrigin};
use crate::solver::{solve, SolveStatus};

/// Which constraint family an adversary attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// Nodal balance, measured by the least load shedding.
    Generation,
    /// Line ratings, measured by the least squared-apparent-power excess.
    Thermal,
}

impl AdversaryKind {
    pub fn origin(self) -> ScenarioOrigin {
        match self {
            AdversaryKind::Generation => ScenarioOrigin::GenerationAdversary,
            AdversaryKind::Thermal => ScenarioOrigin::ThermalAdversary,
        }
    }

    /// Absolute threshold under which a residual counts as zero.
    pub fn threshold(self, case: &NetworkCase, tol: f64) -> f64 {
        match self {
            AdversaryKind::Generation => tol,
            AdversaryKind::Thermal => tol * case.electrical.s_rating.powi(2).max(1.0),
        }
    }

    /// Initial bound on the balance-row duals: shedding has unit cost, while
    /// the excess grows at most like twice the largest corridor flow.
    fn initial_dual_bound(self, case: &NetworkCase) -> f64 {
        match self {
            AdversaryKind::Generation => 10.0,
            AdversaryKind::Thermal => {
                let flow = case.electrical.s_rating * case.max_parallel() as f64;
                8.0 * flow.max(1.0) + 10.0
            }
        }
    }
}

/// Result of a corrective solve at one scenario.
#[derive(Debug, Clone)]
pub struct Corrective {
    /// Total shedding or excess over the modeled periods; `+inf` when the
    /// thermal corrective has no dispatch at all.
    pub residual: f64,
    /// `(period, residual)` per modeled period.
    pub per_period: Vec<(usize, f64)>,
    /// Constraint instances with a residual above the threshold.
    pub violated: TargetMask,
    pub state: Option<OperationalState>,
}

fn spec_for<'a>(kind: AdversaryKind, plan: &'a InvestmentPlan, periods: &[usize]) -> ModelSpec<'a> {
    match kind {
        AdversaryKind::Generation => ModelSpec::shedding(plan, periods.to_vec()),
        AdversaryKind::Thermal => ModelSpec::thermal_excess(plan, periods.to_vec()),
    }
}

fn empty_mask(kind: AdversaryKind) -> TargetMask {
    match kind {
        AdversaryKind::Generation => TargetMask::Generation(Vec::new()),
        AdversaryKind::Thermal => TargetMask::Thermal(Vec::new()),
    }
}

/// Least shedding or excess of `plan` at `scenario` over `periods`.
pub fn corrective(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    scenario: &Scenario,
    kind: AdversaryKind,
    periods: &[usize],
    opts: &RobustOptions,
) -> Result<Corrective, RobustError> {
    let model = build(case, std::slice::from_ref(scenario), &opts.cone, &spec_for(kind, plan, periods))?;
    let sol = solve(&model.instance, &opts.solve)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::Feasible => {}
        SolveStatus::Infeasible if kind == AdversaryKind::Thermal => {
            return Ok(Corrective {
                residual: f64::INFINITY,
                per_period: periods.iter().map(|&g| (g, f64::INFINITY)).collect(),
                violated: empty_mask(kind),
                state: None,
            });
        }
        status => return Err(RobustError::Subproblem { kind, status }),
    }
    Ok(summarise(case, &model, kind, &sol.values, kind.threshold(case, opts.tolerance)))
}

fn summarise(case: &NetworkCase, model: &PlanningModel, kind: AdversaryKind, values: &[f64], thr: f64) -> Corrective {
    let mut per_period: Vec<(usize, f64)> = model.periods.iter().map(|&g| (g, 0.0)).collect();
    let violated = match kind {
        AdversaryKind::Generation => {
            let shed = model.shedding_from(0, values);
            let mut v = Vec::new();
            for (i, row) in shed.iter().enumerate() {
                for (k, &s) in row.iter().enumerate() {
                    per_period[k].1 += s;
                    if s > thr {
                        v.push((i, model.periods[k]));
                    }
                }
            }
            v.sort_by_key(|&(i, g)| (g, i));
            TargetMask::Generation(v)
        }
        AdversaryKind::Thermal => {
            let ex = model.thermal_excess_from(0, values);
            let mut v = Vec::new();
            for (e, edge) in case.edges().iter().enumerate() {
                for (dir, (u, w)) in [(edge.a, edge.b), (edge.b, edge.a)].into_iter().enumerate() {
                    for (k, &s) in ex[e][dir].iter().enumerate() {
                        per_period[k].1 += s;
                        if s > thr {
                            v.push((u, w, model.periods[k]));
                        }
                    }
                }
            }
            v.sort_by_key(|&(u, w, g)| (g, u, w));
            TargetMask::Thermal(v)
        }
    };
    Corrective {
        residual: per_period.iter().map(|p| p.1).sum(),
        per_period,
        violated,
        state: Some(model.state_from(case, 0, values)),
    }
}

/// Least shedding of `plan` at `scenario` over every period.
pub fn corrective_generation(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    scenario: &Scenario,
    opts: &RobustOptions,
) -> Result<Corrective, RobustError> {
    let periods: Vec<usize> = (0..case.total_periods()).collect();
    corrective(case, plan, scenario, AdversaryKind::Generation, &periods, opts)
}

/// Least thermal excess of `plan` at `scenario` over every period.
pub fn corrective_thermal(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    scenario: &Scenario,
    opts: &RobustOptions,
) -> Result<Corrective, RobustError> {
    let periods: Vec<usize> = (0..case.total_periods()).collect();
    corrective(case, plan, scenario, AdversaryKind::Thermal, &periods, opts)
}

/// Worst box vertex for one family over a set of periods.
#[derive(Debug, Clone)]
pub struct AdversaryOutcome {
    pub kind: AdversaryKind,
    pub periods: Vec<usize>,
    /// Vertex: adversarial loads in `periods`, upper bounds elsewhere.
    pub scenario: Scenario,
    /// Corrective residual at `scenario` over `periods` (the max-min value).
    pub objective: f64,
    /// Optimum of the dual MILP that selected the vertex.
    pub milp_objective: f64,
    /// Constraint instances violated by the corrective dispatch.
    pub violated: TargetMask,
    pub per_period: Vec<(usize, f64)>,
    pub dual_bound: f64,
}

const BOUND_GROWTH: f64 = 4.0;
const BOUND_ATTEMPTS: usize = 6;

/// Maximises the corrective residual of `kind` over box vertices, varying
/// only the loads of `periods`.
pub fn adversarial_scenario(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ubox: &UncertaintyBox,
    kind: AdversaryKind,
    periods: &[usize],
    opts: &RobustOptions,
) -> Result<AdversaryOutcome, RobustError> {
    ubox.validate(case)?;
    if periods.is_empty() {
        return Err(RobustError::EmptyMask);
    }
    let lower = Scenario::new(ubox.p_lo.clone(), ubox.q_lo.clone(), kind.origin());
    let model = build(case, std::slice::from_ref(&lower), &opts.cone, &spec_for(kind, plan, periods))?;
    let sv = &model.scenarios[0];
    let mut coords = Vec::new();
    let mut params = Vec::new();
    for (k, &g) in model.periods.iter().enumerate() {
        for i in 0..case.n() {
            for (reactive, row) in [(false, sv.balance_p[i][k]), (true, sv.balance_q[i][k])] {
                let c = Coordinate { reactive, node: i, period: g };
                let (lo, hi) = ubox.bounds(c);
                coords.push(c);
                params.push(ParametricRow { row, base: lo, delta: hi - lo });
            }
        }
    }

    let thr = kind.threshold(case, opts.tolerance);
    let mut bound = kind.initial_dual_bound(case);
    let mut last = None;
    for _ in 0..BOUND_ATTEMPTS {
        let dual = dualize(&model.instance, &params, bound)?;
        let sol = solve(&dual.instance, &opts.solve)?;
        if !sol.status.has_solution() {
            return Err(RobustError::Subproblem { kind, status: sol.status });
        }
        let choices = dual.choices(&sol.values);
        let overrides: Vec<(Coordinate, bool)> = coords.iter().copied().zip(choices).collect();
        let scenario = ubox.vertex(&overrides, kind.origin());
        let corr = corrective(case, plan, &scenario, kind, periods, opts)?;
        let outcome = AdversaryOutcome {
            kind,
            periods: periods.to_vec(),
            scenario,
            objective: corr.residual,
            milp_objective: sol.objective,
            violated: corr.violated,
            per_period: corr.per_period,
            dual_bound: bound,
        };
        // The bounded dual under-estimates the inner minimum; a corrective
        // value above the MILP optimum means the bound was active.
        let consistent = corr.residual <= sol.objective + thr.max(1e-6 * sol.objective.abs());
        if consistent {
            return Ok(outcome);
        }
        last = Some(outcome);
        bound *= BOUND_GROWTH;
    }
    Ok(last.expect("at least one attempt"))
}

/// Worst shedding over the periods touched by a generation mask.
pub fn adversarial_generation(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ubox: &UncertaintyBox,
    mask: &TargetMask,
    opts: &RobustOptions,
) -> Result<AdversaryOutcome, RobustError> {
    let TargetMask::Generation(_) = mask else { return Err(RobustError::MaskKind) };
    adversarial_scenario(case, plan, ubox, AdversaryKind::Generation, &mask.periods(), opts)
}

/// Worst thermal excess over the periods touched by a thermal mask.
pub fn adversarial_thermal(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ubox: &UncertaintyBox,
    mask: &TargetMask,
    opts: &RobustOptions,
) -> Result<AdversaryOutcome, RobustError> {
    let TargetMask::Thermal(_) = mask else { return Err(RobustError::MaskKind) };
    adversarial_scenario(case, plan, ubox, AdversaryKind::Thermal, &mask.periods(), opts)
}
