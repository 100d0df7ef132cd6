//! Mixed 0-1 linear programming: model building, a sparse bounded simplex,
//! branch-and-bound, LP-file export/import and an external-solver bridge.

pub mod branch;
pub mod error;
pub mod external;
pub mod lp_format;
pub mod lu;
pub mod model;
pub mod simplex;
pub mod solution;
pub mod validate;

pub use branch::{solve, solve_with_rounding, BranchOptions, Hint, Rounding};
pub use error::{MilpError, Result};
pub use external::{parse_solution, write_simple_solution, ExternalSolver, ParsedSolution};
pub use lp_format::{read_lp, write_lp};
pub use model::{Model, ObjectiveSense, Row, RowId, Sense, VarId, VarKind, Variable};
pub use simplex::{Basis, LpOptions, LpSolver, LpStatus, VarStatus};
pub use solution::{MilpSolution, SolveStatus};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};
