//! Mixed-integer linear programs: model container, an exact branch-and-bound
//! solver over a dense simplex, and LP-format exchange with external solvers.

mod branch;
mod lpformat;
mod model;
pub mod simplex;

pub use branch::{solve, solve_with, SolveOptions};
pub use lpformat::{equivalent, export_lp, import_solution, lp_names, parse_lp, write_solution};
pub use model::{
    relative_gap, Constraint, LinExpr, MilpModel, Relation, SolveResult, SolveStatus, VarId, VarKind,
    Variable,
};
