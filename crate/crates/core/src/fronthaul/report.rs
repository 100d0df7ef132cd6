//! Link loads of a solution and independent validation.

use cellfree_milp::{validate, ValidationReport};
use serde::Serialize;

use super::problem::{FronthaulProblem, LinkClass};

#[derive(Clone, Debug, Serialize)]
pub struct LinkLoad {
    pub link: String,
    pub class: &'static str,
    pub load: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkLoadReport {
    pub links: Vec<LinkLoad>,
    pub c_l: f64,
    pub c_q: f64,
    pub c_d: f64,
    /// Weighted sum of the class maxima.
    pub objective: f64,
}

fn class_name(c: LinkClass) -> &'static str {
    match c {
        LinkClass::RuRouter => "ru-router",
        LinkClass::RouterRouter => "router-router",
        LinkClass::RouterDu => "router-du",
    }
}

/// Sums UL and DL load variables per physical link and takes class maxima.
pub fn link_load_report(problem: &FronthaulProblem, values: &[f64]) -> LinkLoadReport {
    let mut max = [0.0f64; 3];
    let links = problem
        .links
        .iter()
        .map(|l| {
            let load: f64 = l.vars.iter().map(|v| values[v.index()]).sum();
            let slot = &mut max[l.class as usize];
            *slot = slot.max(load);
            LinkLoad { link: l.name.clone(), class: class_name(l.class), load }
        })
        .collect();
    let w = &problem.weights;
    let [c_l, c_q, c_d] = max;
    LinkLoadReport { links, c_l, c_q, c_d, objective: w.ru_router * c_l + w.router_router * c_q + w.router_du * c_d }
}

#[derive(Clone, Debug)]
pub struct FronthaulValidation {
    pub rows: ValidationReport,
    pub objective_reported: f64,
    pub objective_recomputed: f64,
    /// Class maxima whose variable differs from the recomputed link maximum.
    pub load_mismatches: Vec<String>,
    pub tol: f64,
}

impl FronthaulValidation {
    pub fn is_valid(&self) -> bool {
        self.rows.is_valid()
            && self.load_mismatches.is_empty()
            && (self.objective_reported - self.objective_recomputed).abs() <= self.tol
    }
}

/// Rechecks bounds, integrality and every row within `tol`, recomputes the
/// objective from the link loads, and compares `C_L`, `C_Q`, `C_D` with the
/// true link maxima.
pub fn validate_solution(
    problem: &FronthaulProblem,
    values: &[f64],
    reported_objective: f64,
    tol: f64,
) -> FronthaulValidation {
    let rows = validate(&problem.model, values, tol);
    let report = link_load_report(problem, values);
    let mut load_mismatches = Vec::new();
    for (name, var, actual) in
        [("C_L", problem.c_l, report.c_l), ("C_Q", problem.c_q, report.c_q), ("C_D", problem.c_d, report.c_d)]
    {
        let v = values[var.index()];
        if (v - actual).abs() > tol {
            load_mismatches.push(format!("{name} = {v} but the largest link load is {actual}"));
        }
    }
    FronthaulValidation {
        rows,
        objective_reported: reported_objective,
        objective_recomputed: report.objective,
        load_mismatches,
        tol,
    }
}
