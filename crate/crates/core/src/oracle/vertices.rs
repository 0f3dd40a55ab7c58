//! Exhaustive worst-vertex search for the adversaries.

use rayon::prelude::*;

use crate::case::NetworkCase;
use crate::cone::ConeApproxConfig;
use crate::plan::InvestmentPlan;
use crate::robust::{AdversaryKind, Coordinate, UncertaintyBox};
use crate::scenario::Scenario;
use crate::solver::SolveOptions;

use super::lp::{operational_value, OperationalGoal};
use super::OracleError;

/// Largest number of uncertain coordinates enumerated.
pub const VERTEX_GUARD: usize = 20;

#[derive(Debug, Clone)]
pub struct VertexOptimum {
    pub scenario: Scenario,
    /// Worst residual; `+inf` when some vertex admits no dispatch.
    pub objective: f64,
    pub vertices: usize,
}

/// Scores every vertex of the box restricted to `periods` (other periods sit
/// at their upper bounds) with the fixed-plan corrective LP and returns the
/// worst. Ties keep the first vertex in enumeration order.
pub fn enumerate_vertex_adversary(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ubox: &UncertaintyBox,
    kind: AdversaryKind,
    periods: &[usize],
    cfg: &ConeApproxConfig,
    opts: &SolveOptions,
) -> Result<VertexOptimum, OracleError> {
    ubox.validate(case).map_err(|e| OracleError::Shape(e.to_string()))?;
    let mut coords: Vec<(bool, usize, usize)> = Vec::new();
    for &g in periods {
        for i in 0..case.n() {
            if ubox.p_hi[i][g] > ubox.p_lo[i][g] {
                coords.push((false, i, g));
            }
            if ubox.q_hi[i][g] > ubox.q_lo[i][g] {
                coords.push((true, i, g));
            }
        }
    }
    if coords.len() > VERTEX_GUARD {
        return Err(OracleError::Guard(format!("{} uncertain coordinates exceed {VERTEX_GUARD}", coords.len())));
    }
    let goal = match kind {
        AdversaryKind::Generation => OperationalGoal::Shedding,
        AdversaryKind::Thermal => OperationalGoal::ThermalExcess,
    };
    let count = 1usize << coords.len();
    let scored: Vec<Result<(f64, Scenario), OracleError>> = (0..count)
        .into_par_iter()
        .map(|bits| {
            let mut p = ubox.p_hi.clone();
            let mut q = ubox.q_hi.clone();
            for (k, &(reactive, i, g)) in coords.iter().enumerate() {
                let upper = bits >> k & 1 == 1;
                let c = Coordinate { reactive, node: i, period: g };
                let (lo, hi) = ubox.bounds(c);
                let target = if reactive { &mut q } else { &mut p };
                target[i][g] = if upper { hi } else { lo };
            }
            let s = Scenario::new(p, q, kind.origin());
            let v = operational_value(case, plan, &s, periods, goal, cfg, opts)?;
            Ok((v.unwrap_or(f64::INFINITY), s))
        })
        .collect();
    let mut best: Option<(f64, Scenario)> = None;
    for r in scored {
        let (v, s) = r?;
        if best.as_ref().map_or(true, |b| v > b.0) {
            best = Some((v, s));
        }
    }
    let (objective, scenario) = best.expect("at least one vertex");
    Ok(VertexOptimum { scenario, objective, vertices: count })
}
