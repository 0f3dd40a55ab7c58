//! Yearly cash flows and their net present value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::NetworkCase;
use crate::plan::{InvestmentPlan, OperationalState};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MoneyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyBreakdown<T> {
    pub capex_dist: Vec<T>,
    pub capex_gen: Vec<T>,
    pub opex: Vec<T>,
    pub npv: T,
}

impl<T: Scalar> MoneyBreakdown<T> {
    fn discounted(&self, case: &NetworkCase, series: &[T]) -> T {
        series
            .iter()
            .enumerate()
            .map(|(y, v)| *v * T::lit(case.discount(y)))
            .sum()
    }

    /// Discounted CAPEX (lines + generators).
    pub fn capex_total(&self, case: &NetworkCase) -> T {
        self.discounted(case, &self.capex_dist) + self.discounted(case, &self.capex_gen)
    }

    /// Discounted OPEX.
    pub fn opex_total(&self, case: &NetworkCase) -> T {
        self.discounted(case, &self.opex)
    }
}

fn check_dims(case: &NetworkCase, plan: &InvestmentPlan, ops: &[&OperationalState]) -> Result<(), MoneyError> {
    if plan.n() != case.n() || plan.years() != case.years {
        return Err(MoneyError::Dimension(format!(
            "plan is {}x{} (nodes x years), case is {}x{}",
            plan.n(),
            plan.years(),
            case.n(),
            case.years
        )));
    }
    for (s, op) in ops.iter().enumerate() {
        if op.n() != case.n() || op.periods() != case.total_periods() {
            return Err(MoneyError::Dimension(format!(
                "operational state {s} is {}x{}, expected {}x{}",
                op.n(),
                op.periods(),
                case.n(),
                case.total_periods()
            )));
        }
    }
    Ok(())
}

/// NPV of a plan operated according to `ops`.
pub fn npv<T: Scalar>(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ops: &OperationalState,
) -> Result<MoneyBreakdown<T>, MoneyError> {
    npv_expected(case, plan, &[ops])
}

/// NPV with OPEX averaged over equiprobable operating scenarios.
pub fn npv_expected<T: Scalar>(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    ops: &[&OperationalState],
) -> Result<MoneyBreakdown<T>, MoneyError> {
    check_dims(case, plan, ops)?;
    let c = &case.cost;
    let (c_cond, c_pole, c_gen) = (T::lit(c.c_cond), T::lit(c.c_pole), T::lit(c.c_gen));
    let (a, b) = (T::lit(c.a), T::lit(c.b));
    let n = case.n();
    let per_year = case.periods_per_year();

    let mut out = MoneyBreakdown {
        capex_dist: vec![T::zero(); case.years],
        capex_gen: vec![T::zero(); case.years],
        opex: vec![T::zero(); case.years],
        npv: T::zero(),
    };
    for y in 0..case.years {
        let prev_g = |e: (usize, usize)| if y == 0 { 0 } else { plan.gamma[e.0][e.1][y - 1] };
        let prev_w = |e: (usize, usize)| if y == 0 { 0 } else { plan.omega[e.0][e.1][y - 1] };
        let mut dist = T::zero();
        for e in case.edges() {
            let d = T::lit(case.distance(e.a, e.b));
            let dg = T::lit(plan.gamma[e.a][e.b][y] as f64 - prev_g((e.a, e.b)) as f64);
            let dw = T::lit(plan.omega[e.a][e.b][y] as f64 - prev_w((e.a, e.b)) as f64);
            dist = dist + dg * d * c_cond + dw * d * c_pole;
        }
        let mut gen = T::zero();
        for i in 0..n {
            let prev = if y == 0 { 0 } else { plan.sigma[i][y - 1] };
            gen = gen + T::lit(plan.sigma[i][y] as f64 - prev as f64) * c_gen;
        }
        let installed = T::lit(plan.generator_count(y) as f64);
        let mut fixed = T::zero();
        let mut energy = T::zero();
        for g in y * per_year..(y + 1) * per_year {
            let h = T::lit(case.period_weight(g));
            fixed = fixed + h * a * installed;
            let mut e_sum = T::zero();
            for op in ops {
                for i in 0..n {
                    e_sum = e_sum + T::lit(op.p_gen[i][g]);
                }
            }
            energy = energy + h * b * e_sum;
        }
        let scen = T::lit(ops.len().max(1) as f64);
        out.capex_dist[y] = dist;
        out.capex_gen[y] = gen;
        out.opex[y] = fixed + energy / scen;
    }
    out.npv = (0..case.years)
        .map(|y| (out.capex_dist[y] + out.capex_gen[y] + out.opex[y]) * T::lit(case.discount(y)))
        .sum();
    Ok(out)
}
