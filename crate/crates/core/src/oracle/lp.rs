//! Stand-alone fixed-plan operational LP.
//!
//! Written directly from the network equations, per built line with the
//! per-line impedance divided by the number of parallel circuits, and with
//! its own polyhedral cone towers.

use std::f64::consts::PI;

use crate::case::NetworkCase;
use crate::cone::ConeApproxConfig;
use crate::milp::{LinExpr, MilpInstance, RowLabel, VarId, VarKind};
use crate::plan::InvestmentPlan;
use crate::scenario::Scenario;
use crate::solver::{solve, SolveOptions, SolveStatus};

use super::OracleError;

/// What the operational LP minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperationalGoal {
    /// Discounted variable generation cost, no shedding, hard ratings.
    Dispatch,
    /// Active plus reactive shedding, hard ratings.
    Shedding,
    /// Squared-apparent-power excess over the ratings, no shedding.
    ThermalExcess,
}

fn free(m: &mut MilpInstance, name: String) -> VarId {
    m.add_var(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
}

/// `|(x, y)|` bounded by a polygon with `2^(levels+1)` sides: the returned
/// variable is at least the polygonal norm of `(x, y)`.
fn polygon_norm(m: &mut MilpInstance, x: LinExpr, y: LinExpr, levels: u32, tag: &str) -> VarId {
    let lbl = RowLabel::new("oracle_cone", &[]);
    let mut a = free(m, format!("{tag}_a0"));
    let mut b = free(m, format!("{tag}_b0"));
    m.geq(lbl.clone(), a, x.clone());
    m.geq(lbl.clone(), a, -x);
    m.geq(lbl.clone(), b, y.clone());
    m.geq(lbl.clone(), b, -y);
    for j in 1..=levels {
        let angle = PI / f64::powi(2.0, j as i32 + 1);
        let a_next = free(m, format!("{tag}_a{j}"));
        let b_next = free(m, format!("{tag}_b{j}"));
        m.equal(lbl.clone(), a_next, a * angle.cos() + b * angle.sin());
        let rotated = b * angle.cos() - a * angle.sin();
        m.geq(lbl.clone(), b_next, rotated.clone());
        m.geq(lbl.clone(), b_next, -rotated);
        a = a_next;
        b = b_next;
    }
    let last = (PI / f64::powi(2.0, levels as i32 + 1)).tan();
    m.leq(lbl, b, a * last);
    a
}

fn cone2(m: &mut MilpInstance, x: LinExpr, y: LinExpr, t: LinExpr, cfg: &ConeApproxConfig, tag: &str) {
    let r = polygon_norm(m, x, y, cfg.levels(), tag);
    m.leq(RowLabel::new("oracle_cone", &[]), r, t);
}

/// `x^2 + y^2 <= f * h` with `f, h >= 0`, written as a three-dimensional
/// cone on `(x, y, (f - h)/2) <= (f + h)/2`.
fn rotated(m: &mut MilpInstance, x: LinExpr, y: LinExpr, f: LinExpr, h: LinExpr, cfg: &ConeApproxConfig, tag: &str) {
    let levels = cfg.levels_3d();
    let inner = polygon_norm(m, x, y, levels, &format!("{tag}i"));
    let outer = polygon_norm(m, inner.into(), (f.clone() - h.clone()) * 0.5, levels, &format!("{tag}o"));
    m.leq(RowLabel::new("oracle_cone", &[]), outer, (f + h) * 0.5);
}

/// An assembled operational LP and the variables callers read back.
pub struct OperationalLp {
    pub instance: MilpInstance,
    pub periods: Vec<usize>,
    /// `[i][k]`
    pub p_gen: Vec<Vec<Option<VarId>>>,
    /// `[i][k]`, active and reactive.
    pub shed: Vec<Vec<Vec<VarId>>>,
    /// `(sender, receiver, k, var)`.
    pub excess: Vec<(usize, usize, usize, VarId)>,
}

pub fn write_operational(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    scenario: &Scenario,
    periods: &[usize],
    goal: OperationalGoal,
    cfg: &ConeApproxConfig,
) -> OperationalLp {
    let el = &case.electrical;
    let n = case.n();
    let tan_phi = el.tan_phi();
    let tau = el.tan_theta();
    let flow_cap = case.max_parallel() as f64 * el.s_rating;
    let psi_cap = flow_cap * flow_cap / (el.v_min * el.v_min);
    let mut m = MilpInstance::new();
    let mut obj = LinExpr::new();
    let mut p_gen = vec![Vec::new(); n];
    let mut shed = vec![Vec::new(); n];
    let mut excess = Vec::new();
    let lbl = |f: &'static str| RowLabel::new(f, &[]);

    for (k, &g) in periods.iter().enumerate() {
        let y = case.year_of(g);
        let mut inj_p: Vec<LinExpr> = vec![LinExpr::new(); n];
        let mut inj_q: Vec<LinExpr> = vec![LinExpr::new(); n];
        let mut v2 = Vec::with_capacity(n);
        for i in 0..n {
            v2.push(m.continuous(format!("v2_{k}_{i}"), el.v_min * el.v_min, el.v_max * el.v_max));
            if plan.sigma[i][y] == 1 {
                let pg = m.continuous(format!("pg_{k}_{i}"), el.p_gen_min, el.p_gen_max);
                let qcap = tan_phi * el.p_gen_max;
                let qg = m.continuous(format!("qg_{k}_{i}"), -qcap, qcap);
                m.leq(lbl("oracle_q"), qg, pg * tan_phi);
                m.leq(lbl("oracle_q"), -LinExpr::from(qg), pg * tan_phi);
                inj_p[i] += pg;
                inj_q[i] += qg;
                if goal == OperationalGoal::Dispatch {
                    obj.add_term(pg, case.discount(y) * case.period_weight(g) * case.cost.b);
                }
                p_gen[i].push(Some(pg));
            } else {
                p_gen[i].push(None);
            }
            if goal == OperationalGoal::Shedding {
                let sp = m.continuous(format!("shp_{k}_{i}"), 0.0, f64::INFINITY);
                let sq = m.continuous(format!("shq_{k}_{i}"), 0.0, f64::INFINITY);
                inj_p[i] += sp;
                inj_q[i] += sq;
                obj.add_term(sp, 1.0);
                obj.add_term(sq, 1.0);
                shed[i].push(vec![sp, sq]);
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let c = plan.gamma[a][b][y];
                if c == 0 {
                    continue;
                }
                let cf = c as f64;
                let d = case.distance(a, b);
                let (r, x) = (el.resistance(d) / cf, el.reactance(d) / cf);
                let ends = [(a, b), (b, a)];
                let pf = ends.map(|(u, w)| m.continuous(format!("p_{k}_{u}_{w}"), -flow_cap, flow_cap));
                let qf = ends.map(|(u, w)| m.continuous(format!("q_{k}_{u}_{w}"), -flow_cap, flow_cap));
                let psi = m.continuous(format!("psi_{k}_{a}_{b}"), 0.0, psi_cap);
                let ploss = LinExpr::from(pf[0]) + pf[1];
                let qloss = LinExpr::from(qf[0]) + qf[1];
                m.geq(lbl("oracle_loss"), ploss.clone(), 0.0);
                m.geq(lbl("oracle_loss"), qloss.clone(), 0.0);
                m.equal(lbl("oracle_loss"), ploss, psi * r);
                m.equal(lbl("oracle_loss"), qloss, psi * x);
                m.equal(
                    lbl("oracle_vdrop"),
                    LinExpr::from(v2[a]) - pf[0] * (2.0 * r) - qf[0] * (2.0 * x) + psi * (r * r + x * x),
                    v2[b],
                );
                let rating = el.s_rating * cf;
                for (dir, &(u, w)) in ends.iter().enumerate() {
                    inj_p[u] -= pf[dir];
                    inj_q[u] -= qf[dir];
                    let tag = format!("c{k}_{u}_{w}");
                    rotated(&mut m, pf[dir].into(), qf[dir].into(), psi.into(), v2[u].into(), cfg, &format!("{tag}s"));
                    if goal == OperationalGoal::ThermalExcess {
                        let ex = m.continuous(format!("ex_{k}_{u}_{w}"), 0.0, f64::INFINITY);
                        // Both factors of the rotated cone are scaled to the rating.
                        let f = (LinExpr::from(ex) + rating * rating) * (1.0 / rating);
                        rotated(&mut m, pf[dir].into(), qf[dir].into(), f, LinExpr::constant(rating), cfg, &format!("{tag}t"));
                        obj.add_term(ex, 1.0);
                        excess.push((u, w, k, ex));
                    } else {
                        cone2(&mut m, pf[dir].into(), qf[dir].into(), LinExpr::constant(rating), cfg, &format!("{tag}t"));
                    }
                    let (pd, qd) = (LinExpr::from(pf[dir]), LinExpr::from(qf[dir]));
                    let lim = LinExpr::term(v2[u], tau);
                    m.leq(lbl("oracle_angle"), (qd.clone() + pd.clone() * tau) * r + (qd.clone() * tau - pd.clone()) * x, lim.clone());
                    m.leq(lbl("oracle_angle"), (pd.clone() + qd.clone() * tau) * x + (pd * tau - qd) * r, lim);
                }
            }
        }
        for i in 0..n {
            m.equal(lbl("oracle_balance"), inj_p[i].clone(), scenario.p_load[i][g]);
            m.equal(lbl("oracle_balance"), inj_q[i].clone(), scenario.q_load[i][g]);
        }
    }
    m.objective = obj;
    OperationalLp { instance: m, periods: periods.to_vec(), p_gen, shed, excess }
}

/// Optimal value of the operational LP, or `None` when it is infeasible.
pub fn operational_value(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    scenario: &Scenario,
    periods: &[usize],
    goal: OperationalGoal,
    cfg: &ConeApproxConfig,
    opts: &SolveOptions,
) -> Result<Option<f64>, OracleError> {
    let lp = write_operational(case, plan, scenario, periods, goal, cfg);
    let sol = solve(&lp.instance, opts)?;
    match sol.status {
        SolveStatus::Optimal => Ok(Some(sol.objective)),
        SolveStatus::Infeasible => Ok(None),
        status => Err(OracleError::Status(status)),
    }
}
