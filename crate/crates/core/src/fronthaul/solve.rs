//! Solving the placement model with the built-in branch-and-bound or an
//! external command.

use std::path::Path;
use std::time::Duration;

use cellfree_milp::{solve_with_rounding, BranchOptions, ExternalSolver, Hint, MilpSolution};
use serde::{Deserialize, Serialize};

use super::problem::FronthaulProblem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Shell command template with `{lp}` and `{sol}` placeholders; the
    /// built-in solver is used when absent.
    pub external_command: Option<String>,
    /// Branch-and-bound node budget; keeps results independent of timing.
    pub node_limit: usize,
    /// Wall-clock safety net in seconds.
    pub time_limit: Option<f64>,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { external_command: None, node_limit: 20, time_limit: None, abs_gap: 1e-6, rel_gap: 0.0 }
    }
}

impl SolverConfig {
    pub fn branch_options(&self) -> BranchOptions {
        BranchOptions {
            abs_gap: self.abs_gap,
            rel_gap: self.rel_gap,
            node_limit: Some(self.node_limit),
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            ..BranchOptions::default()
        }
    }
}

/// Rounds the LP placement: users in order of decreasing largest placement
/// value each take their best DU that still has room.
pub fn round_placement(problem: &FronthaulProblem, values: &[f64]) -> Option<Hint> {
    let mut room: Vec<usize> = problem.du_limits.iter().map(|z| z.max(0.0).floor() as usize).collect();
    let mut users: Vec<(usize, f64)> = problem
        .placement_vars
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(k, b)| (k, b.iter().map(|v| values[v.index()]).fold(f64::MIN, f64::max)))
        .collect();
    users.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut placement = vec![None; problem.placement_vars.len()];
    for (k, _) in users {
        let b = &problem.placement_vars[k];
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by(|&x, &y| values[b[y].index()].total_cmp(&values[b[x].index()]).then(x.cmp(&y)));
        let n = order.into_iter().find(|&n| room[n] > 0)?;
        room[n] -= 1;
        placement[k] = Some(n);
    }
    Some(problem.placement_hint(&placement))
}

/// Solves `problem`. `previous` is a placement tried as an incumbent first
/// (for example the one found at the next-smaller distortion). External
/// solvers exchange files in `workdir`.
pub fn solve_problem(
    problem: &FronthaulProblem,
    cfg: &SolverConfig,
    previous: Option<&[Option<usize>]>,
    workdir: &Path,
) -> Result<MilpSolution> {
    if let Some(cmd) = &cfg.external_command {
        std::fs::create_dir_all(workdir)?;
        return ExternalSolver::new(cmd.clone()).solve(&problem.model, workdir).map_err(Error::from);
    }
    let hints: Vec<Hint> = previous
        .filter(|p| p.len() == problem.placement_vars.len())
        .map(|p| problem.placement_hint(p))
        .filter(|h| !h.is_empty())
        .into_iter()
        .collect();
    let rounding = |x: &[f64]| round_placement(problem, x);
    Ok(solve_with_rounding(&problem.model, &cfg.branch_options(), &hints, Some(&rounding)))
}
