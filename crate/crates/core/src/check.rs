//! Direct evaluation of a plan and operating point against the exact
//! (non-relaxed) network constraints.

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::plan::{InvestmentPlan, OperationalState};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed absolute residual of linear rows, scaled by `max(1, |term|)`.
    pub linear: f64,
    /// Cone outer-approximation accuracy: exceedances of the exact cones
    /// inside this band are warnings, beyond it hard violations.
    pub cone_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { linear: 1e-6, cone_eps: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Hard,
    /// Exact cone exceeded within the approximation band.
    ConeGap,
}

/// One evaluated constraint instance. `value` is the violation amount
/// (positive means violated) in the constraint's natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub family: String,
    pub index: Vec<usize>,
    pub value: f64,
    /// Magnitude of the terms involved, used for relative tolerances.
    pub scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualTable {
    pub entries: Vec<Residual>,
}

impl ResidualTable {
    fn push(&mut self, family: &str, index: &[usize], value: f64, scale: f64) {
        self.entries.push(Residual { family: family.to_string(), index: index.to_vec(), value, scale });
    }

    /// Largest residual of `family` (0 when absent or all satisfied).
    pub fn max(&self, family: &str) -> f64 {
        self.entries.iter().filter(|r| r.family == family).map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn families(&self) -> Vec<&str> {
        let mut f: Vec<&str> = self.entries.iter().map(|r| r.family.as_str()).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: String,
    pub index: Vec<usize>,
    pub magnitude: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    /// `max(0, p^2 + q^2 - psi * nu)` per directed branch `[i][j][g]`.
    pub soc_gap: Vec<Vec<Vec<f64>>>,
}

impl ViolationReport {
    pub fn hard(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Hard)
    }

    pub fn is_feasible(&self) -> bool {
        self.hard().next().is_none()
    }

    pub fn families(&self) -> Vec<&str> {
        let mut f: Vec<&str> = self.hard().map(|v| v.family.as_str()).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Evaluates every constraint family at `(plan, state)` for the loads of
/// `scenario`. Families whose shapes do not match are reported under `shape`.
pub fn evaluate_constraints(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    state: &OperationalState,
    scenario: &Scenario,
) -> ResidualTable {
    let mut t = ResidualTable::default();
    if !state.matches(case) || !scenario.matches(case) || plan.n() != case.n() || plan.years() != case.years {
        t.push("shape", &[], f64::INFINITY, 1.0);
        return t;
    }
    if plan.validate(case).is_err() {
        t.push("plan", &[], 1.0, 1.0);
    }
    let el = &case.electrical;
    let n = case.n();
    let tan_phi = el.tan_phi();
    let tau = el.tan_theta();
    let (v2_lo, v2_hi) = (el.v_min * el.v_min, el.v_max * el.v_max);

    for y in 0..case.years {
        let unreachable = plan.reachable_from_source(y).iter().filter(|r| !**r).count();
        t.push("connectivity", &[y], unreachable as f64, 1.0);
    }

    for g in 0..case.total_periods() {
        let y = case.year_of(g);
        for i in 0..n {
            let sigma = plan.sigma[i][y] as f64;
            let (pg, qg) = (state.p_gen[i][g], state.q_gen[i][g]);
            t.push("gen_max", &[i, g], pg - el.p_gen_max * sigma, el.p_gen_max);
            t.push("gen_min", &[i, g], el.p_gen_min * sigma - pg, el.p_gen_max);
            t.push("gen_nonneg", &[i, g], -pg, el.p_gen_max);
            t.push("gen_reactive", &[i, g], qg.abs() - tan_phi * pg, el.p_gen_max);
            t.push("shed_nonneg", &[i, g], -state.p_shed[i][g].min(state.q_shed[i][g]), 1.0);
            let nu = state.nu[i][g];
            t.push("voltage", &[i, g], (v2_lo - nu).max(nu - v2_hi), v2_hi);

            let (mut out_p, mut out_q) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    out_p += state.p_flow[i][j][g];
                    out_q += state.q_flow[i][j][g];
                }
            }
            let bp = pg + state.p_shed[i][g] - out_p - scenario.p_load[i][g];
            let bq = qg + state.q_shed[i][g] - out_q - scenario.q_load[i][g];
            t.push("balance_p", &[i, g], bp.abs(), scenario.p_load[i][g]);
            t.push("balance_q", &[i, g], bq.abs(), scenario.q_load[i][g]);
        }

        for edge in case.edges() {
            let (a, b) = (edge.a, edge.b);
            let gamma = plan.gamma[a][b][y] as f64;
            let d = case.distance(a, b);
            let psi = state.psi[a][b][g];
            let scale = gamma.max(1.0) * el.s_rating;
            let (pl, ql) = (state.p_flow[a][b][g] + state.p_flow[b][a][g], state.q_flow[a][b][g] + state.q_flow[b][a][g]);
            t.push("loss_nonneg_p", &[a, b, g], -pl, scale);
            t.push("loss_nonneg_q", &[a, b, g], -ql, scale);
            t.push("psi_nonneg", &[a, b, g], -psi, 1.0);
            if gamma > 0.0 {
                let (r, x) = (el.resistance(d) / gamma, el.reactance(d) / gamma);
                t.push("loss_p", &[a, b, g], (pl - r * psi).abs(), scale);
                t.push("loss_q", &[a, b, g], (ql - x * psi).abs(), scale);
                for (u, w) in [(a, b), (b, a)] {
                    let (p, q) = (state.p_flow[u][w][g], state.q_flow[u][w][g]);
                    let drop = state.nu[w][g] - state.nu[u][g] + 2.0 * (r * p + x * q) - (r * r + x * x) * psi;
                    t.push("voltage_drop", &[u, w, g], drop.abs(), v2_hi);
                }
            }
            let (r1, x1) = (el.resistance(d), el.reactance(d));
            for (u, w) in [(a, b), (b, a)] {
                let (p, q) = (state.p_flow[u][w][g], state.q_flow[u][w][g]);
                let nu = state.nu[u][g];
                let w_prod = nu * gamma;
                let ang_a = r1 * (q + tau * p) + x1 * (tau * q - p) - tau * w_prod;
                let ang_b = x1 * (p + tau * q) + r1 * (tau * p - q) - tau * w_prod;
                t.push("angle", &[u, w, g], ang_a.max(ang_b), v2_hi * gamma.max(1.0));
                t.push("soc", &[u, w, g], p * p + q * q - psi * nu, psi.abs() * nu + p * p + q * q);
                let cap = gamma * el.s_rating;
                t.push("thermal", &[u, w, g], p * p + q * q - cap * cap, cap * cap);
            }
        }
    }
    t
}

fn within(value: f64, scale: f64, tol: f64) -> bool {
    value <= tol * scale.abs().max(1.0)
}

/// Classifies the residuals of [`evaluate_constraints`] into violations.
pub fn check_plan_against(
    case: &NetworkCase,
    plan: &InvestmentPlan,
    state: &OperationalState,
    scenario: &Scenario,
    tol: &Tolerances,
) -> ViolationReport {
    let table = evaluate_constraints(case, plan, state, scenario);
    let mut report = ViolationReport::default();
    if state.matches(case) {
        let g = case.total_periods();
        report.soc_gap = vec![vec![vec![0.0; g]; case.n()]; case.n()];
    }
    let band = (1.0 + tol.cone_eps) * (1.0 + tol.cone_eps);
    for r in &table.entries {
        let severity = match r.family.as_str() {
            "soc" => {
                let idx = &r.index;
                report.soc_gap[idx[0]][idx[1]][idx[2]] = r.value.max(0.0);
                if within(r.value, r.scale, tol.linear) {
                    continue;
                }
                // Compare in the norm form the approximation guarantees:
                // sqrt(p^2 + q^2 + v^2) <= (1 + eps) u with u, v the rotated factors.
                let (u, w, g) = (idx[0], idx[1], idx[2]);
                let (p, q) = (state.p_flow[u][w][g], state.q_flow[u][w][g]);
                let (psi, nu) = (state.psi[u][w][g], state.nu[u][g]);
                let (uu, vv) = ((psi + nu) / 2.0, (psi - nu) / 2.0);
                if p * p + q * q + vv * vv <= band * uu * uu * (1.0 + tol.linear) {
                    Severity::ConeGap
                } else {
                    Severity::Hard
                }
            }
            "thermal" => {
                if within(r.value, r.scale, tol.linear) {
                    continue;
                }
                let cap2 = r.scale;
                if r.value + cap2 <= band * cap2 * (1.0 + tol.linear) && cap2 > 0.0 {
                    Severity::ConeGap
                } else {
                    Severity::Hard
                }
            }
            "connectivity" | "plan" | "shape" => {
                if r.value <= 0.0 {
                    continue;
                }
                Severity::Hard
            }
            _ => {
                if within(r.value, r.scale, tol.linear) {
                    continue;
                }
                Severity::Hard
            }
        };
        report.violations.push(Violation {
            family: r.family.clone(),
            index: r.index.clone(),
            magnitude: r.value,
            severity,
        });
    }
    report
}

/// [`check_plan_against`] with the deterministic loads of the case.
pub fn check_plan(case: &NetworkCase, plan: &InvestmentPlan, state: &OperationalState, tol: &Tolerances) -> ViolationReport {
    check_plan_against(case, plan, state, &Scenario::deterministic(case), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case;

    fn pair() -> NetworkCase {
        let text = r#"{
            "nodes": [
                {"id": "a", "x": 0, "y": 0, "p_load": [0], "q_load": [0]},
                {"id": "b", "x": 1, "y": 0, "p_load": [3], "q_load": [0]}
            ],
            "costs": {"c_cond": 1, "c_pole": 1, "c_gen": 1, "a": 0, "b": 0},
            "electrical": {"r": 0.3, "x": 0.3, "v_min": 0.9, "v_max": 1.1, "s_rating": 2,
                "p_gen_max": 10, "p_gen_min": 0, "cos_phi_min": 0.8, "max_parallel": 2, "theta_delta": 0.5},
            "horizon": {"years": 1, "periods_per_day": 1},
            "growth_rate": 0, "scale_factor_H": 1, "discount_rate": 0
        }"#;
        load_case(text.as_bytes()).unwrap()
    }

    /// Lossless hand-built state: a feeds 3 kW to b over one line.
    fn setup(gamma: u32) -> (NetworkCase, InvestmentPlan, OperationalState) {
        let case = pair();
        let mut plan = InvestmentPlan::empty_for(&case);
        plan.set_generator(0, 0);
        plan.set_lines(0, 1, 0, gamma);
        let mut st = OperationalState::zeros(2, 1);
        st.p_gen[0][0] = 3.0;
        st.p_flow[0][1][0] = 3.0;
        st.p_flow[1][0][0] = -3.0;
        st.nu[0][0] = 1.0;
        st.nu[1][0] = 1.0 - 2.0 * case.electrical.resistance(1.0) / gamma as f64 * 3.0;
        (case, plan, st)
    }

    #[test]
    fn balanced_state_has_zero_balance_residual() {
        let (case, plan, st) = setup(2);
        let table = evaluate_constraints(&case, &plan, &st, &Scenario::deterministic(&case));
        assert_eq!(table.max("balance_p"), 0.0);
        assert_eq!(table.max("balance_q"), 0.0);
        let rep = check_plan(&case, &plan, &st, &Tolerances::default());
        // psi = 0 with nonzero flow breaks the exact branch cone only.
        assert_eq!(rep.families(), vec!["soc"]);
    }

    #[test]
    fn negative_losses_flagged_with_magnitude() {
        let (case, plan, mut st) = setup(2);
        st.p_flow[1][0][0] = -4.0;
        let table = evaluate_constraints(&case, &plan, &st, &Scenario::deterministic(&case));
        assert!((table.max("loss_nonneg_p") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_violation_magnitude() {
        let (case, plan, st) = setup(1);
        let rep = check_plan(&case, &plan, &st, &Tolerances::default());
        let v = rep.hard().find(|v| v.family == "thermal").unwrap();
        assert!((v.magnitude - (9.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn isolated_node_flagged() {
        let (case, mut plan, st) = setup(2);
        plan.set_lines(0, 1, 0, 0);
        let rep = check_plan(&case, &plan, &st, &Tolerances::default());
        assert!(rep.families().contains(&"connectivity"));
    }
}
