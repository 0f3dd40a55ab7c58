//! Brute-force reference answers for small instances.
//!
//! Nothing here goes through the planning formulation or the adversary
//! machinery: designs and vertices are enumerated explicitly and every
//! candidate is scored with a separately written operational LP.

pub mod designs;
pub mod lp;
pub mod vertices;

use thiserror::Error;

use crate::solver::{SolveError, SolveStatus};

pub use crate::check::{evaluate_constraints, ResidualTable};
pub use designs::{design_fixed_cost, enumerate_designs, DesignOptimum, DESIGN_GUARD_NODES};
pub use lp::{operational_value, write_operational, OperationalGoal, OperationalLp};
pub use vertices::{enumerate_vertex_adversary, VertexOptimum, VERTEX_GUARD};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration guard exceeded: {0}")]
    Guard(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("operational LP ended with status {0:?}")]
    Status(SolveStatus),
    #[error("no feasible design exists")]
    NoFeasibleDesign,
    #[error("box or plan does not match the case: {0}")]
    Shape(String),
}
