//! LP duality with binary-parametrised right-hand sides.
//!
//! For a minimisation LP whose selected equality rows read
//! `a_r . x = base_r + delta_r * z_r` with `z_r` binary, the inner minimum is
//! concave-free in `z` only through the dual: `max_{y,z} b(z)' y`. The
//! bilinear products `y_r z_r` are linearised exactly with a bound `|y_r| <= B`,
//! giving one MILP whose optimum equals `max_z min_x` whenever some optimal
//! dual solution respects the bound.

use thiserror::Error;

use crate::milp::{LinExpr, MilpInstance, RowId, RowLabel, Sense, VarId, VarKind};

#[derive(Debug, Error, PartialEq)]
pub enum DualError {
    #[error("only minimisation problems can be dualised")]
    Sense,
    #[error("variable {0} is not continuous")]
    Integer(String),
    #[error("parametric row {0} is not an equality")]
    NotEquality(usize),
    #[error("dual bound must be positive and finite, got {0}")]
    Bound(f64),
}

/// Row whose right-hand side is `base + delta * z` for a binary `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricRow {
    pub row: RowId,
    pub base: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct DualMilp {
    pub instance: MilpInstance,
    /// Binary selector per parametric row (`None` when `delta == 0`).
    pub selectors: Vec<Option<VarId>>,
    /// Dual multiplier per parametric row.
    pub multipliers: Vec<VarId>,
}

impl DualMilp {
    /// Selector values rounded to booleans (absent selectors read as false).
    pub fn choices(&self, values: &[f64]) -> Vec<bool> {
        self.selectors.iter().map(|s| s.is_some_and(|v| values[v.0] > 0.5)).collect()
    }
}

/// Builds the max-min dual MILP of `primal` over the given parametric rows.
pub fn dualize(primal: &MilpInstance, params: &[ParametricRow], bound: f64) -> Result<DualMilp, DualError> {
    if primal.sense != Sense::Minimize {
        return Err(DualError::Sense);
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(DualError::Bound(bound));
    }
    if let Some(v) = primal.vars.iter().find(|v| v.kind != VarKind::Continuous) {
        return Err(DualError::Integer(v.name.clone()));
    }
    let mut param_of = vec![None; primal.rows.len()];
    for (k, p) in params.iter().enumerate() {
        let row = &primal.rows[p.row.0];
        if row.lo != row.hi {
            return Err(DualError::NotEquality(p.row.0));
        }
        param_of[p.row.0] = Some(k);
    }

    let mut d = MilpInstance::new();
    d.sense = Sense::Maximize;
    let mut obj = LinExpr::constant(primal.objective.constant);
    let mut columns: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); primal.vars.len()];
    let mut selectors = vec![None; params.len()];
    let mut multipliers = vec![VarId(0); params.len()];

    for (r, row) in primal.rows.iter().enumerate() {
        // Each entry: (dual variable, sign applied to the row coefficients).
        let mut duals: Vec<(VarId, f64)> = Vec::with_capacity(2);
        if let Some(k) = param_of[r] {
            let p = params[k];
            let y = d.continuous(format!("y_{r}"), -bound, bound);
            obj.add_term(y, p.base);
            if p.delta != 0.0 {
                let z = d.add_var(format!("z_{r}"), VarKind::Binary, 0.0, 1.0);
                let w = d.continuous(format!("w_{r}"), -bound, bound);
                obj.add_term(w, p.delta);
                let idx = [r];
                d.leq(RowLabel::new("mc_up_z", &idx), w, LinExpr::term(z, bound));
                d.geq(RowLabel::new("mc_down_z", &idx), w, LinExpr::term(z, -bound));
                // w <= y + B(1 - z), w >= y - B(1 - z)
                let mut up = LinExpr::term(y, 1.0);
                up.add_term(z, -bound);
                up.constant = bound;
                d.leq(RowLabel::new("mc_up_y", &idx), w, up);
                let mut down = LinExpr::term(y, 1.0);
                down.add_term(z, bound);
                down.constant = -bound;
                d.geq(RowLabel::new("mc_down_y", &idx), w, down);
                selectors[k] = Some(z);
            }
            multipliers[k] = y;
            duals.push((y, 1.0));
        } else if row.lo == row.hi {
            let y = d.continuous(format!("y_{r}"), f64::NEG_INFINITY, f64::INFINITY);
            obj.add_term(y, row.lo);
            duals.push((y, 1.0));
        } else {
            if row.lo.is_finite() {
                let y = d.continuous(format!("yl_{r}"), 0.0, f64::INFINITY);
                obj.add_term(y, row.lo);
                duals.push((y, 1.0));
            }
            if row.hi.is_finite() {
                let y = d.continuous(format!("yu_{r}"), 0.0, f64::INFINITY);
                obj.add_term(y, -row.hi);
                duals.push((y, -1.0));
            }
        }
        for &(v, a) in &row.coeffs {
            for &(y, s) in &duals {
                columns[v.0].push((y, s * a));
            }
        }
    }

    let cost = primal.objective.clone().normalized();
    let mut c = vec![0.0; primal.vars.len()];
    for (v, a) in cost.terms {
        c[v.0] += a;
    }
    for (j, var) in primal.vars.iter().enumerate() {
        let mut expr = LinExpr { terms: std::mem::take(&mut columns[j]), constant: 0.0 };
        if var.lo == var.hi && var.lo.is_finite() {
            let mu = d.continuous(format!("mu_{j}"), f64::NEG_INFINITY, f64::INFINITY);
            obj.add_term(mu, var.lo);
            expr.add_term(mu, 1.0);
        } else {
            if var.lo.is_finite() {
                let mu = d.continuous(format!("mul_{j}"), 0.0, f64::INFINITY);
                obj.add_term(mu, var.lo);
                expr.add_term(mu, 1.0);
            }
            if var.hi.is_finite() {
                let mu = d.continuous(format!("muu_{j}"), 0.0, f64::INFINITY);
                obj.add_term(mu, -var.hi);
                expr.add_term(mu, -1.0);
            }
        }
        d.add_row(RowLabel::new("reduced_cost", &[j]), expr, c[j], c[j]);
    }
    d.objective = obj.normalized();
    Ok(DualMilp { instance: d, selectors, multipliers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolveOptions, SolveStatus};

    /// min x1 + 2 x2, x1 + x2 = L, x1 <= 1.5, x >= 0, x2 - x1 >= -1.
    fn primal(rhs: f64) -> (MilpInstance, RowId) {
        let mut m = MilpInstance::new();
        let x1 = m.continuous("x1", 0.0, 1.5);
        let x2 = m.continuous("x2", 0.0, f64::INFINITY);
        let mut bal = LinExpr::term(x1, 1.0);
        bal.add_term(x2, 1.0);
        let r = m.add_row(RowLabel::new("bal", &[]), bal, rhs, rhs);
        let mut diff = LinExpr::term(x2, 1.0);
        diff.add_term(x1, -1.0);
        m.add_row(RowLabel::new("diff", &[]), diff, -1.0, f64::INFINITY);
        let mut obj = LinExpr::term(x1, 1.0);
        obj.add_term(x2, 2.0);
        m.objective = obj;
        (m, r)
    }

    #[test]
    fn dual_value_matches_primal_without_parameters() {
        let opts = SolveOptions::default();
        for rhs in [0.0, 0.7, 2.0, 3.5] {
            let (m, r) = primal(rhs);
            let p = solve(&m, &opts).unwrap();
            let d = dualize(&m, &[ParametricRow { row: r, base: rhs, delta: 0.0 }], 100.0).unwrap();
            let ds = solve(&d.instance, &opts).unwrap();
            assert_eq!(ds.status, SolveStatus::Optimal);
            assert!((p.objective - ds.objective).abs() < 1e-6, "{rhs}: {} vs {}", p.objective, ds.objective);
        }
    }

    #[test]
    fn max_min_picks_worst_rhs() {
        let opts = SolveOptions::default();
        let (m, r) = primal(1.0);
        let d = dualize(&m, &[ParametricRow { row: r, base: 1.0, delta: 2.0 }], 100.0).unwrap();
        let ds = solve(&d.instance, &opts).unwrap();
        // L = 3: x1 = 1.5, x2 = 1.5, cost 4.5.
        assert!((ds.objective - 4.5).abs() < 1e-6);
        assert_eq!(d.choices(&ds.values), vec![true]);
    }

    #[test]
    fn max_min_can_pick_the_lower_rhs() {
        // min s subject to x + s = L, x in [0, 2]: the residual
        // max(0, L - 2) is worst at L = 3 whichever bound encodes it.
        let mut m = MilpInstance::new();
        let x = m.continuous("x", 0.0, 2.0);
        let s = m.continuous("s", 0.0, f64::INFINITY);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(s, 1.0);
        let r = m.add_row(RowLabel::new("bal", &[]), e, 3.0, 3.0);
        m.objective = LinExpr::term(s, 1.0);
        let d = dualize(&m, &[ParametricRow { row: r, base: 2.0, delta: 1.0 }], 10.0).unwrap();
        let ds = solve(&d.instance, &SolveOptions::default()).unwrap();
        assert!((ds.objective - 1.0).abs() < 1e-9);
        assert_eq!(d.choices(&ds.values), vec![true]);
        let d = dualize(&m, &[ParametricRow { row: r, base: 3.0, delta: -1.0 }], 10.0).unwrap();
        let ds = solve(&d.instance, &SolveOptions::default()).unwrap();
        assert!((ds.objective - 1.0).abs() < 1e-9);
        assert_eq!(d.choices(&ds.values), vec![false]);
    }

    #[test]
    fn rejects_maximisation_and_integers() {
        let (mut m, r) = primal(1.0);
        m.sense = Sense::Maximize;
        assert_eq!(dualize(&m, &[], 1.0).unwrap_err(), DualError::Sense);
        let (mut m, _) = primal(1.0);
        m.add_var("k", VarKind::Integer, 0.0, 3.0);
        assert!(matches!(dualize(&m, &[], 1.0), Err(DualError::Integer(_))));
        let (m, _) = primal(1.0);
        assert_eq!(dualize(&m, &[ParametricRow { row: RowId(1), base: 0.0, delta: 1.0 }], 1.0).unwrap_err(), DualError::NotEquality(1));
        let _ = r;
    }
}
