use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Node budget exhausted with an incumbent; `bound` holds the proven bound.
    FeasibleWithGap,
    Infeasible,
    TimeLimit,
    /// Budget exhausted before any integer-feasible point was found.
    NoSolution,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleWithGap => "feasible-with-gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::NoSolution => "no-solution",
        }
    }

    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleWithGap | SolveStatus::TimeLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MilpSolution {
    pub fn gap(&self) -> f64 {
        (self.objective - self.bound).abs()
    }
}
