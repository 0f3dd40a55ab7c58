//! Translation of a planning case into a mixed-integer linear model.
//!
//! Second-order cones are replaced by polyhedral outer approximations
//! ([`crate::cone`]), products of voltage and line count are linearized
//! exactly through the binary level indicators, and big-M rows switch the
//! per-level loss and voltage-drop equations on and off.

pub mod bigm;
mod builder;

pub use bigm::{big_m_from, compute_big_m, BigMSet};
pub use builder::{
    build, build_deterministic, build_main_problem, FormulationError, InvestmentVars, Investments, ModelSpec,
    ObjectiveKind, PlanningModel, ScenarioVars, Slot, ThermalMode,
};
