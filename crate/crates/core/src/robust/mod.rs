//! Adversarial scenario generation and the robust planning loop.

pub mod adversary;
pub mod dual;
pub mod dump;
pub mod engine;
pub mod sweep;
pub mod uncertainty;

use thiserror::Error;

use crate::cone::ConeApproxConfig;
use crate::formulation::FormulationError;
use crate::solver::{ExtractError, SolveError, SolveOptions, SolveStatus};

pub use adversary::{
    adversarial_generation, adversarial_scenario, adversarial_thermal, corrective, corrective_generation,
    corrective_thermal, AdversaryKind, AdversaryOutcome, Corrective,
};
pub use dual::{dualize, DualError, DualMilp, ParametricRow};
pub use dump::{read_scenarios, write_scenarios, DumpError, ScenarioRecord};
pub use engine::{robust_plan, robust_plan_from, solve_main, IterationAudit, MainSolve, RobustResult};
pub use sweep::{adversary_sweep, Finding, SweepReport};
pub use uncertainty::{BoxError, Coordinate, TargetMask, UncertaintyBox};

/// Residual below which a scenario is not problematic.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Main-problem solves before the loop gives up.
pub const DEFAULT_MAX_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustOptions {
    pub cone: ConeApproxConfig,
    pub solve: SolveOptions,
    /// Residual threshold; thermal residuals scale it by the squared rating.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Run independent adversary solves on the rayon pool.
    pub parallel: bool,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions {
            cone: ConeApproxConfig::default(),
            solve: SolveOptions::default(),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            parallel: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum RobustError {
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("adversary mask is empty")]
    EmptyMask,
    #[error("mask kind does not match the adversary")]
    MaskKind,
    #[error("{kind:?} subproblem ended with status {status:?}")]
    Subproblem { kind: AdversaryKind, status: SolveStatus },
    #[error("main problem ended with status {0:?}")]
    MainProblem(SolveStatus),
    #[error("problematic scenarios remain after {} iterations", audit.len())]
    IterationCap { audit: Vec<IterationAudit> },
    #[error("sweep reported only scenarios already in the set; residuals {residuals:?}")]
    NoProgress { residuals: Vec<f64>, audit: Vec<IterationAudit> },
    #[error("seed scenario {0} does not match the case")]
    SeedShape(usize),
}
