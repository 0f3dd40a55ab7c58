//! Assembly of planning and fixed-plan operational models.

use thiserror::Error;

use crate::case::NetworkCase;
use crate::cone::{approximate_cone, approximate_rotated_cone, ConeApproxConfig};
use crate::formulation::bigm::{compute_big_m, BigMSet};
use crate::milp::{LinExpr, MilpInstance, RowId, RowLabel, VarId, VarKind};
use crate::plan::{InvestmentPlan, OperationalState, PlanError};
use crate::scenario::Scenario;

#[derive(Debug, Error, PartialEq)]
pub enum FormulationError {
    #[error("scenario list is empty")]
    NoScenarios,
    #[error("scenario {index} has shape {n}x{periods}, expected {expected_n}x{expected_periods}")]
    ScenarioShape { index: usize, n: usize, periods: usize, expected_n: usize, expected_periods: usize },
    #[error("period {0} is outside the planning horizon")]
    Period(usize),
    #[error("objective {0:?} needs {1}")]
    Objective(ObjectiveKind, &'static str),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Whether investment decisions are variables or given.
#[derive(Debug, Clone, Copy)]
pub enum Investments<'a> {
    Free,
    Fixed(&'a InvestmentPlan),
}

/// Treatment of the line thermal rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermalMode {
    /// `sqrt(p^2 + q^2) <= S * gamma` is a hard constraint.
    Enforced,
    /// Each directed branch-period gets an excess `s >= p^2 + q^2 - (S gamma)^2`, `s >= 0`.
    Slack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// CAPEX plus scenario-averaged OPEX, discounted.
    Npv,
    /// Total active plus reactive shedding.
    Shedding,
    /// Total thermal excess.
    ThermalExcess,
}

#[derive(Debug, Clone)]
pub struct ModelSpec<'a> {
    pub investments: Investments<'a>,
    /// Global periods to model, ascending.
    pub periods: Vec<usize>,
    pub shedding: bool,
    pub thermal: ThermalMode,
    pub objective: ObjectiveKind,
}

impl<'a> ModelSpec<'a> {
    /// Free investments over the whole horizon with the NPV objective.
    pub fn planning(case: &NetworkCase) -> Self {
        ModelSpec {
            investments: Investments::Free,
            periods: (0..case.total_periods()).collect(),
            shedding: false,
            thermal: ThermalMode::Enforced,
            objective: ObjectiveKind::Npv,
        }
    }

    /// Fixed plan, minimal shedding over `periods`.
    pub fn shedding(plan: &'a InvestmentPlan, periods: Vec<usize>) -> Self {
        ModelSpec {
            investments: Investments::Fixed(plan),
            periods,
            shedding: true,
            thermal: ThermalMode::Enforced,
            objective: ObjectiveKind::Shedding,
        }
    }

    /// Fixed plan, minimal thermal excess over `periods`.
    pub fn thermal_excess(plan: &'a InvestmentPlan, periods: Vec<usize>) -> Self {
        ModelSpec {
            investments: Investments::Fixed(plan),
            periods,
            shedding: false,
            thermal: ThermalMode::Slack,
            objective: ObjectiveKind::ThermalExcess,
        }
    }
}

/// Investment variables; edge index follows [`NetworkCase::edges`].
#[derive(Debug, Clone)]
pub struct InvestmentVars {
    pub gamma: Vec<Vec<VarId>>,
    pub omega: Vec<Vec<VarId>>,
    /// `[e][k-1][y]`
    pub loi: Vec<Vec<Vec<VarId>>>,
    pub sigma: Vec<Vec<VarId>>,
    /// Fictitious connectivity flow `[e][dir][y]`, dir 0 is `a -> b`.
    pub fict: Vec<[Vec<VarId>; 2]>,
}

/// A modeled quantity, or `None` where the fixed plan forces it to zero.
pub type Slot = Option<VarId>;

/// Operational variables of one scenario; the last index runs over the
/// modeled periods of [`PlanningModel::periods`].
#[derive(Debug, Clone)]
pub struct ScenarioVars {
    pub p_gen: Vec<Vec<Slot>>,
    pub q_gen: Vec<Vec<Slot>>,
    /// `[e][dir][k]`, dir 0 is `a -> b`.
    pub p_flow: Vec<[Vec<Slot>; 2]>,
    pub q_flow: Vec<[Vec<Slot>; 2]>,
    pub psi: Vec<Vec<Slot>>,
    pub nu: Vec<Vec<VarId>>,
    pub p_shed: Vec<Vec<Slot>>,
    pub q_shed: Vec<Vec<Slot>>,
    pub thermal_excess: Vec<[Vec<Slot>; 2]>,
    /// Nodal balance rows `[i][k]`; their bounds hold the load.
    pub balance_p: Vec<Vec<RowId>>,
    pub balance_q: Vec<Vec<RowId>>,
}

#[derive(Debug, Clone)]
pub struct PlanningModel {
    pub instance: MilpInstance,
    pub periods: Vec<usize>,
    pub investments: Option<InvestmentVars>,
    pub fixed_plan: Option<InvestmentPlan>,
    pub scenarios: Vec<ScenarioVars>,
    pub objective: ObjectiveKind,
    pub big_m: BigMSet<f64>,
}

fn read(values: &[f64], slot: Slot) -> f64 {
    slot.map_or(0.0, |v| values[v.0])
}

impl PlanningModel {
    /// Investment plan encoded by `values` (integers rounded), or the fixed plan.
    pub fn plan_from(&self, case: &NetworkCase, values: &[f64]) -> InvestmentPlan {
        let Some(inv) = &self.investments else {
            return self.fixed_plan.clone().expect("fixed models carry their plan");
        };
        let mut plan = InvestmentPlan::empty_for(case);
        let int = |v: VarId| values[v.0].round().max(0.0);
        for (e, edge) in case.edges().iter().enumerate() {
            for y in 0..case.years {
                for (u, w) in [(edge.a, edge.b), (edge.b, edge.a)] {
                    plan.gamma[u][w][y] = int(inv.gamma[e][y]) as u32;
                    plan.omega[u][w][y] = int(inv.omega[e][y]) as u8;
                    for k in 0..case.max_parallel() {
                        plan.loi[u][w][k][y] = int(inv.loi[e][k][y]) as u8;
                    }
                }
            }
        }
        for i in 0..case.n() {
            for y in 0..case.years {
                plan.sigma[i][y] = int(inv.sigma[i][y]) as u8;
            }
        }
        plan
    }

    /// Operating point of scenario `s`; unmodeled periods are left at zero.
    pub fn state_from(&self, case: &NetworkCase, s: usize, values: &[f64]) -> OperationalState {
        let sv = &self.scenarios[s];
        let mut st = OperationalState::zeros(case.n(), case.total_periods());
        for (k, &g) in self.periods.iter().enumerate() {
            for i in 0..case.n() {
                st.p_gen[i][g] = read(values, sv.p_gen[i][k]);
                st.q_gen[i][g] = read(values, sv.q_gen[i][k]);
                st.nu[i][g] = values[sv.nu[i][k].0];
                st.p_shed[i][g] = read(values, sv.p_shed[i][k]);
                st.q_shed[i][g] = read(values, sv.q_shed[i][k]);
            }
            for (e, edge) in case.edges().iter().enumerate() {
                st.p_flow[edge.a][edge.b][g] = read(values, sv.p_flow[e][0][k]);
                st.p_flow[edge.b][edge.a][g] = read(values, sv.p_flow[e][1][k]);
                st.q_flow[edge.a][edge.b][g] = read(values, sv.q_flow[e][0][k]);
                st.q_flow[edge.b][edge.a][g] = read(values, sv.q_flow[e][1][k]);
                let psi = read(values, sv.psi[e][k]);
                st.psi[edge.a][edge.b][g] = psi;
                st.psi[edge.b][edge.a][g] = psi;
            }
        }
        st
    }

    /// Shedding `[i][k]` (active plus reactive) of scenario `s`.
    pub fn shedding_from(&self, s: usize, values: &[f64]) -> Vec<Vec<f64>> {
        let sv = &self.scenarios[s];
        sv.p_shed
            .iter()
            .zip(&sv.q_shed)
            .map(|(p, q)| p.iter().zip(q).map(|(&a, &b)| read(values, a) + read(values, b)).collect())
            .collect()
    }

    /// Thermal excess `[e][dir][k]` of scenario `s`.
    pub fn thermal_excess_from(&self, s: usize, values: &[f64]) -> Vec<[Vec<f64>; 2]> {
        self.scenarios[s]
            .thermal_excess
            .iter()
            .map(|d| [0, 1].map(|dir| d[dir].iter().map(|&v| read(values, v)).collect()))
            .collect()
    }
}

/// Deterministic planning model: the main problem over the single
/// deterministic scenario.
pub fn build_deterministic(case: &NetworkCase, cone: &ConeApproxConfig) -> Result<PlanningModel, FormulationError> {
    build_main_problem(case, &[Scenario::deterministic(case)], cone)
}

/// Planning model with one operational copy per scenario and shared investments.
pub fn build_main_problem(
    case: &NetworkCase,
    scenarios: &[Scenario],
    cone: &ConeApproxConfig,
) -> Result<PlanningModel, FormulationError> {
    build(case, scenarios, cone, &ModelSpec::planning(case))
}

/// General entry point behind the named builders.
pub fn build(
    case: &NetworkCase,
    scenarios: &[Scenario],
    cone: &ConeApproxConfig,
    spec: &ModelSpec<'_>,
) -> Result<PlanningModel, FormulationError> {
    if scenarios.is_empty() {
        return Err(FormulationError::NoScenarios);
    }
    for (index, s) in scenarios.iter().enumerate() {
        if !s.matches(case) {
            return Err(FormulationError::ScenarioShape {
                index,
                n: s.n(),
                periods: s.periods(),
                expected_n: case.n(),
                expected_periods: case.total_periods(),
            });
        }
    }
    if let Some(&g) = spec.periods.iter().find(|&&g| g >= case.total_periods()) {
        return Err(FormulationError::Period(g));
    }
    if spec.objective == ObjectiveKind::Shedding && !spec.shedding {
        return Err(FormulationError::Objective(spec.objective, "shedding variables"));
    }
    if spec.objective == ObjectiveKind::ThermalExcess && spec.thermal != ThermalMode::Slack {
        return Err(FormulationError::Objective(spec.objective, "thermal slack mode"));
    }
    if spec.thermal == ThermalMode::Slack && matches!(spec.investments, Investments::Free) {
        return Err(FormulationError::Objective(spec.objective, "fixed investments for thermal slack"));
    }
    if let Investments::Fixed(plan) = spec.investments {
        plan.validate(case)?;
    }

    let mut b = Builder {
        case,
        cone,
        spec,
        m: MilpInstance::new(),
        big_m: compute_big_m(case),
        inv: None,
    };
    if matches!(spec.investments, Investments::Free) {
        b.investment_block();
    }
    let mut svars = Vec::with_capacity(scenarios.len());
    for (s, scen) in scenarios.iter().enumerate() {
        svars.push(b.scenario_block(s, scen));
    }
    let objective = b.objective(&svars, scenarios.len());
    b.m.objective = objective.normalized();
    Ok(PlanningModel {
        instance: b.m,
        periods: spec.periods.clone(),
        investments: b.inv,
        fixed_plan: match spec.investments {
            Investments::Fixed(p) => Some(p.clone()),
            Investments::Free => None,
        },
        scenarios: svars,
        objective: spec.objective,
        big_m: b.big_m,
    })
}

struct Builder<'a> {
    case: &'a NetworkCase,
    cone: &'a ConeApproxConfig,
    spec: &'a ModelSpec<'a>,
    m: MilpInstance,
    big_m: BigMSet<f64>,
    inv: Option<InvestmentVars>,
}

impl Builder<'_> {
    fn xi(&self) -> usize {
        self.case.max_parallel()
    }

    fn fixed(&self) -> Option<&InvestmentPlan> {
        match self.spec.investments {
            Investments::Fixed(p) => Some(p),
            Investments::Free => None,
        }
    }

    /// gamma of edge `e` in year `y`.
    fn gamma(&self, e: usize, y: usize) -> LinExpr {
        match (&self.inv, self.fixed()) {
            (Some(inv), _) => inv.gamma[e][y].into(),
            (None, Some(p)) => {
                let edge = self.case.edges()[e];
                LinExpr::constant(p.gamma[edge.a][edge.b][y] as f64)
            }
            _ => unreachable!(),
        }
    }

    fn omega(&self, e: usize, y: usize) -> LinExpr {
        match (&self.inv, self.fixed()) {
            (Some(inv), _) => inv.omega[e][y].into(),
            (None, Some(p)) => {
                let edge = self.case.edges()[e];
                LinExpr::constant(p.omega[edge.a][edge.b][y] as f64)
            }
            _ => unreachable!(),
        }
    }

    /// Level indicator `k` (1-based); `k > max_parallel` is identically zero.
    fn loi(&self, e: usize, k: usize, y: usize) -> LinExpr {
        if k > self.xi() {
            return LinExpr::new();
        }
        match (&self.inv, self.fixed()) {
            (Some(inv), _) => inv.loi[e][k - 1][y].into(),
            (None, Some(p)) => {
                let edge = self.case.edges()[e];
                LinExpr::constant(p.loi[edge.a][edge.b][k - 1][y] as f64)
            }
            _ => unreachable!(),
        }
    }

    fn sigma(&self, i: usize, y: usize) -> LinExpr {
        match (&self.inv, self.fixed()) {
            (Some(inv), _) => inv.sigma[i][y].into(),
            (None, Some(p)) => LinExpr::constant(p.sigma[i][y] as f64),
            _ => unreachable!(),
        }
    }

    fn investment_block(&mut self) {
        let case = self.case;
        let (n, years, xi) = (case.n(), case.years, self.xi());
        let m = &mut self.m;
        let edges = case.edges();
        let mut gamma = Vec::with_capacity(edges.len());
        let mut omega = Vec::with_capacity(edges.len());
        let mut loi = Vec::with_capacity(edges.len());
        for edge in edges {
            let (a, b) = (edge.a, edge.b);
            gamma.push(
                (0..years).map(|y| m.add_var(format!("gamma_{a}_{b}_y{y}"), VarKind::Integer, 0.0, xi as f64)).collect::<Vec<_>>(),
            );
            omega.push((0..years).map(|y| m.add_var(format!("omega_{a}_{b}_y{y}"), VarKind::Binary, 0.0, 1.0)).collect::<Vec<_>>());
            loi.push(
                (1..=xi)
                    .map(|k| {
                        (0..years)
                            .map(|y| m.add_var(format!("loi_{a}_{b}_k{k}_y{y}"), VarKind::Binary, 0.0, 1.0))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let sigma: Vec<Vec<VarId>> = (0..n)
            .map(|i| (0..years).map(|y| m.add_var(format!("sigma_{i}_y{y}"), VarKind::Binary, 0.0, 1.0)).collect())
            .collect();

        for (e, _) in edges.iter().enumerate() {
            for y in 0..years {
                if y > 0 {
                    m.geq(RowLabel::new("gamma_mono", &[e, y]), gamma[e][y], gamma[e][y - 1]);
                    m.geq(RowLabel::new("omega_mono", &[e, y]), omega[e][y], omega[e][y - 1]);
                }
                let mut levels = LinExpr::new();
                for k in 0..xi {
                    levels += loi[e][k][y];
                }
                m.equal(RowLabel::new("loi_sum", &[e, y]), levels, gamma[e][y]);
                m.equal(RowLabel::new("loi_first", &[e, y]), loi[e][0][y], omega[e][y]);
                for k in 1..xi {
                    m.geq(RowLabel::new("loi_order", &[e, k, y]), loi[e][k - 1][y], loi[e][k][y]);
                }
            }
        }
        for (i, s) in sigma.iter().enumerate() {
            for y in 1..years {
                m.geq(RowLabel::new("sigma_mono", &[i, y]), s[y], s[y - 1]);
            }
        }

        // Connectivity: a single commodity leaves the source (node 0) and
        // every other node absorbs one unit, travelling only on built lines.
        let mut fict = Vec::with_capacity(edges.len());
        if n > 1 {
            for edge in edges {
                let (a, b) = (edge.a, edge.b);
                let fwd: Vec<VarId> = (0..years).map(|y| m.continuous(format!("f_{a}_{b}_y{y}"), 0.0, n as f64)).collect();
                let bwd: Vec<VarId> = (0..years).map(|y| m.continuous(format!("f_{b}_{a}_y{y}"), 0.0, n as f64)).collect();
                fict.push([fwd, bwd]);
            }
            for y in 0..years {
                let mut count = LinExpr::new();
                for (e, _) in edges.iter().enumerate() {
                    count += omega[e][y] * 2.0;
                    for dir in 0..2 {
                        m.leq(RowLabel::new("conn_cap", &[e, dir, y]), fict[e][dir][y], omega[e][y] * n as f64);
                    }
                }
                m.geq(RowLabel::new("conn_count", &[y]), count, 2.0 * (n as f64 - 1.0));
                for i in 0..n {
                    let mut net_in = LinExpr::new();
                    for (e, edge) in edges.iter().enumerate() {
                        if edge.b == i {
                            net_in += fict[e][0][y];
                            net_in -= fict[e][1][y];
                        } else if edge.a == i {
                            net_in += fict[e][1][y];
                            net_in -= fict[e][0][y];
                        }
                    }
                    if i == 0 {
                        m.equal(RowLabel::new("conn_source", &[y]), -net_in, n as f64 - 1.0);
                    } else {
                        m.equal(RowLabel::new("conn_node", &[i, y]), net_in, 1.0);
                    }
                }
            }
        }
        self.inv = Some(InvestmentVars { gamma, omega, loi, sigma, fict });
    }

    fn scenario_block(&mut self, s: usize, scen: &Scenario) -> ScenarioVars {
        let case = self.case;
        let (n, ne, np) = (case.n(), case.edges().len(), self.spec.periods.len());
        let mut sv = ScenarioVars {
            p_gen: vec![Vec::with_capacity(np); n],
            q_gen: vec![Vec::with_capacity(np); n],
            p_flow: vec![[Vec::with_capacity(np), Vec::with_capacity(np)]; ne],
            q_flow: vec![[Vec::with_capacity(np), Vec::with_capacity(np)]; ne],
            psi: vec![Vec::with_capacity(np); ne],
            nu: vec![Vec::with_capacity(np); n],
            p_shed: vec![Vec::with_capacity(np); n],
            q_shed: vec![Vec::with_capacity(np); n],
            thermal_excess: vec![[Vec::with_capacity(np), Vec::with_capacity(np)]; ne],
            balance_p: vec![Vec::with_capacity(np); n],
            balance_q: vec![Vec::with_capacity(np); n],
        };
        for k in 0..np {
            self.period_block(s, k, scen, &mut sv);
        }
        sv
    }

    fn period_block(&mut self, s: usize, k: usize, scen: &Scenario, sv: &mut ScenarioVars) {
        let case = self.case;
        let el = &case.electrical;
        let g = self.spec.periods[k];
        let y = case.year_of(g);
        let n = case.n();
        let xi = self.xi();
        let tan_phi = el.tan_phi();
        let (v2_lo, v2_hi) = (el.v_min * el.v_min, el.v_max * el.v_max);
        let flow_cap = xi as f64 * el.s_rating;
        let fixed = self.fixed().cloned();

        // Generators and nodal quantities.
        for i in 0..n {
            let installed = fixed.as_ref().map(|p| p.sigma[i][y] == 1);
            let (pg, qg) = if installed == Some(false) {
                (None, None)
            } else {
                let p_lo = if installed == Some(true) { el.p_gen_min } else { 0.0 };
                let pg = self.m.continuous(format!("pg_s{s}_g{g}_{i}"), p_lo, el.p_gen_max);
                let qg = self.m.continuous(
                    format!("qg_s{s}_g{g}_{i}"),
                    -tan_phi * el.p_gen_max,
                    tan_phi * el.p_gen_max,
                );
                if installed.is_none() {
                    let sigma = self.sigma(i, y);
                    self.m.leq(RowLabel::new("gen_max", &[s, k, i]), pg, sigma.clone() * el.p_gen_max);
                    if el.p_gen_min > 0.0 {
                        self.m.geq(RowLabel::new("gen_min", &[s, k, i]), pg, sigma * el.p_gen_min);
                    }
                }
                self.m.leq(RowLabel::new("gen_q_up", &[s, k, i]), qg, pg * tan_phi);
                self.m.geq(RowLabel::new("gen_q_down", &[s, k, i]), qg, pg * -tan_phi);
                (Some(pg), Some(qg))
            };
            sv.p_gen[i].push(pg);
            sv.q_gen[i].push(qg);
            sv.nu[i].push(self.m.continuous(format!("nu_s{s}_g{g}_{i}"), v2_lo, v2_hi));
            let (ps, qs) = if self.spec.shedding {
                (
                    Some(self.m.continuous(format!("pshed_s{s}_g{g}_{i}"), 0.0, f64::INFINITY)),
                    Some(self.m.continuous(format!("qshed_s{s}_g{g}_{i}"), 0.0, f64::INFINITY)),
                )
            } else {
                (None, None)
            };
            sv.p_shed[i].push(ps);
            sv.q_shed[i].push(qs);
        }

        // Branch quantities.
        for (e, edge) in case.edges().iter().enumerate() {
            let built = fixed.as_ref().map(|p| p.gamma[edge.a][edge.b][y]);
            if built == Some(0) {
                for dir in 0..2 {
                    sv.p_flow[e][dir].push(None);
                    sv.q_flow[e][dir].push(None);
                    sv.thermal_excess[e][dir].push(None);
                }
                sv.psi[e].push(None);
                continue;
            }
            let names = [(edge.a, edge.b), (edge.b, edge.a)];
            for (dir, (u, w)) in names.iter().enumerate() {
                sv.p_flow[e][dir].push(Some(self.m.continuous(format!("p_s{s}_g{g}_{u}_{w}"), -flow_cap, flow_cap)));
                sv.q_flow[e][dir].push(Some(self.m.continuous(format!("q_s{s}_g{g}_{u}_{w}"), -flow_cap, flow_cap)));
            }
            sv.psi[e].push(Some(self.m.continuous(
                format!("psi_s{s}_g{g}_{}_{}", edge.a, edge.b),
                0.0,
                self.big_m.psi_max,
            )));
            self.branch_rows(s, k, e, built, sv);
        }

        // Nodal balance: generation + shedding - outgoing flows = load.
        for i in 0..n {
            let mut p_expr = LinExpr::new();
            let mut q_expr = LinExpr::new();
            for v in [sv.p_gen[i][k], sv.p_shed[i][k]].into_iter().flatten() {
                p_expr += v;
            }
            for v in [sv.q_gen[i][k], sv.q_shed[i][k]].into_iter().flatten() {
                q_expr += v;
            }
            for (e, edge) in case.edges().iter().enumerate() {
                let dir = if edge.a == i {
                    0
                } else if edge.b == i {
                    1
                } else {
                    continue;
                };
                if let Some(v) = sv.p_flow[e][dir][k] {
                    p_expr -= v;
                }
                if let Some(v) = sv.q_flow[e][dir][k] {
                    q_expr -= v;
                }
            }
            let (pl, ql) = (scen.p_load[i][g], scen.q_load[i][g]);
            sv.balance_p[i].push(self.m.add_row(RowLabel::new("balance_p", &[s, k, i]), p_expr, pl, pl));
            sv.balance_q[i].push(self.m.add_row(RowLabel::new("balance_q", &[s, k, i]), q_expr, ql, ql));
        }
    }

    /// Loss, voltage-drop, cone and angle rows of one corridor-period.
    /// `built` is the fixed line count, or `None` when investments are free.
    fn branch_rows(&mut self, s: usize, k: usize, e: usize, built: Option<u32>, sv: &mut ScenarioVars) {
        let case = self.case;
        let el = &case.electrical;
        let edge = case.edges()[e];
        let g = self.spec.periods[k];
        let y = case.year_of(g);
        let xi = self.xi();
        let d = case.distance(edge.a, edge.b);
        let (r, x) = (el.resistance(d), el.reactance(d));
        let (m1, m2) = (self.big_m.m1, self.big_m.m2);
        let p = [sv.p_flow[e][0][k].unwrap(), sv.p_flow[e][1][k].unwrap()];
        let q = [sv.q_flow[e][0][k].unwrap(), sv.q_flow[e][1][k].unwrap()];
        let psi = sv.psi[e][k].unwrap();
        let nu = [sv.nu[edge.a][k], sv.nu[edge.b][k]];
        let lbl = |fam: &'static str, extra: &[usize]| {
            let mut idx = vec![s, k, e];
            idx.extend_from_slice(extra);
            RowLabel::new(fam, &idx)
        };

        let p_loss = LinExpr::from(p[0]) + p[1];
        let q_loss = LinExpr::from(q[0]) + q[1];
        self.m.geq(lbl("loss_pos_p", &[]), p_loss.clone(), 0.0);
        self.m.geq(lbl("loss_pos_q", &[]), q_loss.clone(), 0.0);

        // Level-k rows hold only for the installed level; the reverse-direction
        // voltage row is implied by the forward one and the loss rows.
        let levels: Vec<usize> = match built {
            Some(c) => vec![c as usize],
            None => (1..=xi).collect(),
        };
        for lvl in levels {
            let (rk, xk) = (r / lvl as f64, x / lvl as f64);
            let loss_p = p_loss.clone() - psi * rk;
            let loss_q = q_loss.clone() - psi * xk;
            let drop = LinExpr::from(nu[1]) - nu[0] + p[0] * (2.0 * rk) + q[0] * (2.0 * xk) - psi * (rk * rk + xk * xk);
            match built {
                Some(_) => {
                    self.m.equal(lbl("loss_p", &[lvl, 0]), loss_p, 0.0);
                    self.m.equal(lbl("loss_q", &[lvl, 0]), loss_q, 0.0);
                    self.m.equal(lbl("vdrop", &[lvl, 0]), drop, 0.0);
                }
                None => {
                    let active = self.loi(e, lvl, y) - self.loi(e, lvl + 1, y);
                    for (fam, expr, big) in [("loss_p", loss_p, m1), ("loss_q", loss_q, m1), ("vdrop", drop, m2)] {
                        self.m.leq(lbl(fam, &[lvl, 0]), expr.clone() + active.clone() * big, big);
                        self.m.geq(lbl(fam, &[lvl, 1]), expr - active.clone() * big, -big);
                    }
                }
            }
        }

        let rating = self.gamma(e, y) * el.s_rating;
        for dir in 0..2 {
            approximate_rotated_cone(
                &mut self.m,
                p[dir].into(),
                q[dir].into(),
                psi.into(),
                nu[dir].into(),
                self.cone,
                "soc",
                &[s, k, e, dir],
            );
            match self.spec.thermal {
                ThermalMode::Enforced => {
                    approximate_cone(&mut self.m, p[dir].into(), q[dir].into(), rating.clone(), self.cone, "thermal", &[s, k, e, dir]);
                    sv.thermal_excess[e][dir].push(None);
                }
                ThermalMode::Slack => {
                    // p^2 + q^2 <= c^2 + excess as a rotated cone with both
                    // factors scaled to magnitude c = S * gamma.
                    let c = rating.constant;
                    let (u, w) = (edge.a, edge.b);
                    let ex = self.m.continuous(format!("excess_s{s}_g{g}_{u}_{w}_{dir}"), 0.0, f64::INFINITY);
                    let (factor, scale) = if c > 0.0 {
                        ((LinExpr::from(ex) + c * c) * (1.0 / c), c)
                    } else {
                        (LinExpr::from(ex), 1.0)
                    };
                    approximate_rotated_cone(
                        &mut self.m,
                        p[dir].into(),
                        q[dir].into(),
                        factor,
                        LinExpr::constant(scale),
                        self.cone,
                        "thermal",
                        &[s, k, e, dir],
                    );
                    sv.thermal_excess[e][dir].push(Some(ex));
                }
            }
        }

        // Angle-difference limits with w = nu_sender * gamma.
        let tau = el.tan_theta();
        for dir in 0..2 {
            let w = match built {
                Some(c) => LinExpr::term(nu[dir], c as f64),
                None => self.nu_times_gamma(s, k, e, dir, nu[dir], y),
            };
            let (pd, qd) = (LinExpr::from(p[dir]), LinExpr::from(q[dir]));
            let a = (qd.clone() + pd.clone() * tau) * r + (qd.clone() * tau - pd.clone()) * x;
            let b = (pd.clone() + qd.clone() * tau) * x + (pd * tau - qd) * r;
            self.m.leq(lbl("angle_a", &[dir]), a, w.clone() * tau);
            self.m.leq(lbl("angle_b", &[dir]), b, w * tau);
        }
    }

    /// `sum_k nu * loi_k` with an exact envelope per binary level indicator.
    fn nu_times_gamma(&mut self, s: usize, k: usize, e: usize, dir: usize, nu: VarId, y: usize) -> LinExpr {
        let el = &self.case.electrical;
        let (lo, hi) = (el.v_min * el.v_min, el.v_max * el.v_max);
        let g = self.spec.periods[k];
        let mut w = LinExpr::new();
        for lvl in 1..=self.xi() {
            let z = self.loi(e, lvl, y);
            let u = self.m.continuous(format!("nuloi_s{s}_g{g}_e{e}_{dir}_k{lvl}"), 0.0, hi);
            let lbl = |part: usize| RowLabel::new("nu_loi", &[s, k, e, dir, lvl, part]);
            self.m.leq(lbl(0), u, z.clone() * hi);
            self.m.geq(lbl(1), u, z.clone() * lo);
            self.m.leq(lbl(2), u, LinExpr::from(nu) - (LinExpr::constant(1.0) - z.clone()) * lo);
            self.m.geq(lbl(3), u, LinExpr::from(nu) - (LinExpr::constant(1.0) - z) * hi);
            w += u;
        }
        w
    }

    fn objective(&self, svars: &[ScenarioVars], n_scen: usize) -> LinExpr {
        let case = self.case;
        let mut obj = LinExpr::new();
        match self.spec.objective {
            ObjectiveKind::Npv => {
                let c = &case.cost;
                for y in 0..case.years {
                    let disc = case.discount(y);
                    for (e, edge) in case.edges().iter().enumerate() {
                        let dist = case.distance(edge.a, edge.b);
                        let mut dg = self.gamma(e, y);
                        let mut dw = self.omega(e, y);
                        if y > 0 {
                            dg -= self.gamma(e, y - 1);
                            dw -= self.omega(e, y - 1);
                        }
                        obj += dg * (disc * dist * c.c_cond) + dw * (disc * dist * c.c_pole);
                    }
                    for i in 0..case.n() {
                        let mut ds = self.sigma(i, y);
                        if y > 0 {
                            ds -= self.sigma(i, y - 1);
                        }
                        obj += ds * (disc * c.c_gen);
                    }
                }
                // Fixed running cost accrues over every period of the year.
                for g in 0..case.total_periods() {
                    let y = case.year_of(g);
                    let w = case.discount(y) * case.period_weight(g) * c.a;
                    for i in 0..case.n() {
                        obj += self.sigma(i, y) * w;
                    }
                }
                let share = 1.0 / n_scen as f64;
                for sv in svars {
                    for (k, &g) in self.spec.periods.iter().enumerate() {
                        let w = case.discount(case.year_of(g)) * case.period_weight(g) * c.b * share;
                        for i in 0..case.n() {
                            if let Some(v) = sv.p_gen[i][k] {
                                obj.add_term(v, w);
                            }
                        }
                    }
                }
            }
            ObjectiveKind::Shedding => {
                for sv in svars {
                    for v in sv.p_shed.iter().chain(&sv.q_shed).flatten().flatten() {
                        obj.add_term(*v, 1.0);
                    }
                }
            }
            ObjectiveKind::ThermalExcess => {
                for sv in svars {
                    for v in sv.thermal_excess.iter().flatten().flatten().flatten() {
                        obj.add_term(*v, 1.0);
                    }
                }
            }
        }
        obj
    }
}
