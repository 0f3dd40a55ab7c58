//! Exhaustive search over investment plans of tiny cases.

use rayon::prelude::*;

use crate::case::NetworkCase;
use crate::cone::ConeApproxConfig;
use crate::plan::InvestmentPlan;
use crate::scenario::Scenario;
use crate::solver::SolveOptions;

use super::lp::{operational_value, OperationalGoal};
use super::OracleError;

pub const DESIGN_GUARD_NODES: usize = 4;
const DESIGN_GUARD_PARALLEL: usize = 2;

#[derive(Debug, Clone)]
pub struct DesignOptimum {
    pub plan: InvestmentPlan,
    pub objective: f64,
    /// Candidate designs (connected, at least one generator).
    pub candidates: usize,
    /// Designs whose operational LP was actually solved.
    pub evaluated: usize,
}

/// Discounted line, pole and generator spending plus the fixed generator
/// running cost, summed independently of the planning model.
pub fn design_fixed_cost(case: &NetworkCase, plan: &InvestmentPlan) -> f64 {
    let c = &case.cost;
    let n = case.n();
    let mut total = 0.0;
    for y in 0..case.years {
        let disc = case.discount(y);
        for a in 0..n {
            for b in a + 1..n {
                let prev = |v: &Vec<Vec<Vec<u32>>>| if y == 0 { 0 } else { v[a][b][y - 1] };
                let new_lines = plan.gamma[a][b][y] - prev(&plan.gamma);
                let old_poles = if y == 0 { 0 } else { plan.omega[a][b][y - 1] };
                let new_poles = plan.omega[a][b][y] - old_poles;
                let d = case.distance(a, b);
                total += disc * d * (new_lines as f64 * c.c_cond + new_poles as f64 * c.c_pole);
            }
        }
        for i in 0..n {
            let before = if y == 0 { 0 } else { plan.sigma[i][y - 1] };
            total += disc * (plan.sigma[i][y] - before) as f64 * c.c_gen;
        }
    }
    for g in 0..case.total_periods() {
        let y = case.year_of(g);
        let running: f64 = (0..n).map(|i| plan.sigma[i][y] as f64).sum();
        total += case.discount(y) * case.period_weight(g) * c.a * running;
    }
    total
}

fn connected(n: usize, counts: &[(usize, usize, u32)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b, c) in counts {
            if c == 0 {
                continue;
            }
            for (s, t) in [(a, b), (b, a)] {
                if s == u && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn make_plan(case: &NetworkCase, counts: &[(usize, usize, u32)], gens: usize) -> InvestmentPlan {
    let mut plan = InvestmentPlan::empty_for(case);
    for &(a, b, c) in counts {
        if c > 0 {
            plan.set_lines(a, b, 0, c);
        }
    }
    for i in 0..case.n() {
        if gens >> i & 1 == 1 {
            plan.set_generator(i, 0);
        }
    }
    plan
}

/// Cheapest single-year plan by enumerating every line count per corridor
/// and every generator subset. Designs are scored in increasing order of
/// their fixed cost; once that bound reaches the incumbent the rest cannot
/// win (variable generation cost is non-negative).
pub fn enumerate_designs(case: &NetworkCase, cfg: &ConeApproxConfig, opts: &SolveOptions) -> Result<DesignOptimum, OracleError> {
    let n = case.n();
    let xi = case.max_parallel();
    if n > DESIGN_GUARD_NODES || case.years != 1 || xi > DESIGN_GUARD_PARALLEL {
        return Err(OracleError::Guard(format!(
            "design enumeration needs n <= {DESIGN_GUARD_NODES}, one year and at most {DESIGN_GUARD_PARALLEL} parallel lines \
             (got n = {n}, years = {}, parallel = {xi})",
            case.years
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let combos = (xi + 1).pow(pairs.len() as u32);
    let mut designs = Vec::new();
    for code in 0..combos {
        let mut rest = code;
        let counts: Vec<(usize, usize, u32)> = pairs
            .iter()
            .map(|&(a, b)| {
                let c = (rest % (xi + 1)) as u32;
                rest /= xi + 1;
                (a, b, c)
            })
            .collect();
        if !connected(n, &counts) {
            continue;
        }
        for gens in 1..(1usize << n) {
            let plan = make_plan(case, &counts, gens);
            designs.push((design_fixed_cost(case, &plan), plan));
        }
    }
    let candidates = designs.len();
    designs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scenario = Scenario::deterministic(case);
    let periods: Vec<usize> = (0..case.total_periods()).collect();
    let mut best: Option<(f64, InvestmentPlan)> = None;
    let mut evaluated = 0;
    // Score in batches so cheap designs can prune the tail early.
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut start = 0;
    while start < designs.len() {
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if designs[start].0 >= bound {
            break;
        }
        let end = (start + batch).min(designs.len());
        let chunk = &designs[start..end];
        let scored: Vec<Result<Option<f64>, OracleError>> = chunk
            .par_iter()
            .map(|(fixed, plan)| {
                if *fixed >= bound {
                    return Ok(None);
                }
                let opex = operational_value(case, plan, &scenario, &periods, OperationalGoal::Dispatch, cfg, opts)?;
                Ok(opex.map(|o| fixed + o))
            })
            .collect();
        for ((fixed, plan), r) in chunk.iter().zip(scored) {
            if *fixed < bound {
                evaluated += 1;
            }
            if let Some(total) = r? {
                if best.as_ref().map_or(true, |b| total < b.0) {
                    best = Some((total, plan.clone()));
                }
            }
        }
        start = end;
    }
    let (objective, plan) = best.ok_or(OracleError::NoFeasibleDesign)?;
    Ok(DesignOptimum { plan, objective, candidates, evaluated })
}
