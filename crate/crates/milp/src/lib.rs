//! Small mixed-integer linear programming toolkit: a model builder, an
//! embedded simplex-based branch-and-bound solver, CPLEX LP export, an
//! external-solver bridge and an independent feasibility checker.

mod check;
mod error;
mod external;
mod lp_format;
mod model;
mod simplex;
mod solver;

pub use check::{check_solution, Violation};
pub use error::{ModelError, SolveError};
pub use external::parse_solution;
pub use lp_format::{export_lp, lp_var_names};
pub use model::{ConstraintId, LinConstraint, MilpModel, Sense, Var, VarId, VarKind};
pub use solver::{
    solve, solve_lp, solve_milp, solve_milp_with_start, solve_with_start, Backend, Solution, SolveStats,
    SolverConfig, Status, FEAS_TOL,
};
