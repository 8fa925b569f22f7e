//! Small self-contained MILP toolkit: model builder, bounded primal simplex,
//! best-first branch-and-bound and MPS export.

mod bnb;
mod model;
mod mps;
mod propagate;
mod simplex;

pub use bnb::{solve_bnb, BranchDecision, NodeOutcome, NodeRecord, SolveResult, SolveStatus, SolverParams};
pub use model::{Constraint, MilpModel, Relation, VarId, Variable};
pub use mps::{format_number, to_mps_string, write_mps};
pub use simplex::{solve_lp, LpSolution, LpStatus, FEAS_TOL};
