//! Robust investment planning for isolated distribution microgrids.
//!
//! The pipeline reads a [`case::NetworkCase`], builds a mixed-integer model
//! with a polyhedral relaxation of the branch-flow equations
//! ([`formulation`], [`cone`]), solves it ([`solver`]) and hardens the plan
//! against rectangular load uncertainty by alternating with adversarial
//! scenario searches ([`robust`]). [`chance`] turns a probabilistic load model
//! into such a box and [`oracle`] provides brute-force reference answers.

pub mod case;
pub mod chance;
pub mod check;
pub mod cone;
pub mod formulation;
pub mod milp;
pub mod money;
pub mod oracle;
pub mod plan;
pub mod robust;
pub mod scalar;
pub mod scenario;
pub mod solver;

pub use case::{load_case, CaseError, NetworkCase};
pub use cone::ConeApproxConfig;
pub use plan::{InvestmentPlan, OperationalState};
pub use robust::{robust_plan, RobustOptions, RobustResult, UncertaintyBox};
pub use scenario::Scenario;
pub use solver::{SolveOptions, SolveStatus};
