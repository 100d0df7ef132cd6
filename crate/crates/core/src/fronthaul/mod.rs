//! Fronthaul placement and routing optimization.

mod problem;
mod report;
mod solve;
mod topology;

pub use problem::{build_milp, half_load_limit, FronthaulProblem, Link, LinkClass, LoadWeights, TrafficDemand};
pub use report::{link_load_report, validate_solution, FronthaulValidation, LinkLoad, LinkLoadReport};
pub use solve::{round_placement, solve_problem, SolverConfig};
pub use topology::{default_router_positions, default_topology, FronthaulGraph};
