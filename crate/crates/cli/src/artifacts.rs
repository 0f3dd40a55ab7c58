//! Machine-readable output documents and the text summary.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use mgplan::money::MoneyBreakdown;
use mgplan::robust::{IterationAudit, UncertaintyBox};
use mgplan::{InvestmentPlan, NetworkCase, OperationalState, SolveOptions};
use serde::{Deserialize, Serialize};

pub const PLAN_SCHEMA: &str = "mgplan.plan/1";
pub const ROBUST_SCHEMA: &str = "mgplan.robust/1";
pub const BOX_SCHEMA: &str = "mgplan.box/1";

/// Options that shape the optimisation result, echoed into artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub btn_accuracy: f64,
    pub mip_gap: f64,
    pub backend: String,
}

impl ModelSettings {
    pub fn new(btn_accuracy: f64, solve: &SolveOptions) -> Self {
        ModelSettings { btn_accuracy, mip_gap: solve.mip_gap, backend: solve.backend.to_string() }
    }
}

/// `plan.json`: the plan, its cash flows and the dispatch of the
/// deterministic loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub schema: String,
    pub settings: ModelSettings,
    pub objective: f64,
    pub capex: f64,
    pub opex: f64,
    pub money: MoneyBreakdown<f64>,
    pub plan: InvestmentPlan,
    pub dispatch: OperationalState,
}

impl PlanDocument {
    pub fn new(
        case: &NetworkCase,
        settings: ModelSettings,
        objective: f64,
        money: MoneyBreakdown<f64>,
        plan: InvestmentPlan,
        dispatch: OperationalState,
    ) -> Self {
        PlanDocument {
            schema: PLAN_SCHEMA.to_string(),
            settings,
            objective,
            capex: money.capex_total(case),
            opex: money.opex_total(case),
            money,
            plan,
            dispatch,
        }
    }
}

/// How the uncertainty box was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoxSource {
    Scaled { load_lb: f64, load_ub: f64 },
    Chance { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustStatus {
    Converged,
    IterationCap,
    NoProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub fingerprint: String,
    pub origin: mgplan::scenario::ScenarioOrigin,
    pub iteration: usize,
}

/// `robust.json`: outcome of the scenario-generation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustDocument {
    pub schema: String,
    pub status: RobustStatus,
    pub settings: ModelSettings,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub source: BoxSource,
    pub uncertainty: UncertaintyBox,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub money: Option<MoneyBreakdown<f64>>,
    pub scenarios: Vec<ScenarioEntry>,
    pub audit: Vec<IterationAudit>,
}

/// `box.json`: a chance-constrained box and optionally its sampled coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDocument {
    pub schema: String,
    pub epsilon: f64,
    pub uncertain_coordinates: usize,
    pub coordinate_mass: f64,
    pub joint_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Coverage>,
    pub uncertainty: UncertaintyBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub samples: usize,
    pub seed: u64,
    pub fraction: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Rows of the cost summary table.
pub struct Summary {
    pub opex: f64,
    pub capex: f64,
    pub total: f64,
    pub scenarios: usize,
    pub iterations: usize,
    pub seconds: f64,
}

impl Summary {
    pub fn render(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let rows = [
            ("OPEX", format!("{:.2}", self.opex)),
            ("CAPEX", format!("{:.2}", self.capex)),
            ("Total cost", format!("{:.2}", self.total)),
            ("Scenarios", self.scenarios.to_string()),
            ("Iterations", self.iterations.to_string()),
            ("Wall time [s]", format!("{:.2}", self.seconds)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<14} {v:>16}");
        }
        out
    }
}
