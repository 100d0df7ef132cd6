//! File-based bridge to an external MILP solver.
//!
//! The model is written as a CPLEX LP file, the configured command is run
//! through `sh -c` with `{lp}` and `{sol}` replaced by the file paths, and the
//! solution file is parsed in either of two formats:
//!
//! * simple: one `name value` pair per line, `#` comments, optional
//!   `status <word>` and `objective <value>` lines;
//! * CBC: a header line such as `Optimal - objective value 2.4` followed by
//!   `index name value reduced_cost` lines.

use std::path::Path;
use std::process::Command;

use crate::error::{MilpError, Result};
use crate::lp_format::write_lp;
use crate::model::Model;
use crate::solution::{MilpSolution, SolveStatus};

#[derive(Clone, Debug)]
pub struct ExternalSolver {
    /// Shell command template containing `{lp}` and `{sol}`.
    pub command: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Vec<f64>,
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSolver { command: command.into() }
    }

    /// Runs the external solver on `model` using files in `workdir`.
    pub fn solve(&self, model: &Model, workdir: &Path) -> Result<MilpSolution> {
        let lp = workdir.join(format!("{}.lp", sanitize(&model.name)));
        let sol = workdir.join(format!("{}.sol", sanitize(&model.name)));
        std::fs::write(&lp, write_lp(model)?)?;
        if sol.exists() {
            std::fs::remove_file(&sol)?;
        }
        let cmd = self.command.replace("{lp}", &shell_quote(&lp)).replace("{sol}", &shell_quote(&sol));
        log::info!("running external solver: {cmd}");
        let out = Command::new("sh").arg("-c").arg(&cmd).output()?;
        if !out.status.success() {
            return Err(MilpError::External(format!(
                "`{cmd}` exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let text = std::fs::read_to_string(&sol)
            .map_err(|e| MilpError::External(format!("cannot read solution file {}: {e}", sol.display())))?;
        let parsed = parse_solution(&text, model)?;
        let objective = if parsed.status.has_solution() { model.objective_value(&parsed.values) } else { f64::NAN };
        if let (Some(reported), true) = (parsed.objective, objective.is_finite()) {
            if (reported - objective).abs() > 1e-6 * (1.0 + objective.abs()) {
                log::warn!("external solver reported objective {reported}, recomputed {objective}");
            }
        }
        Ok(MilpSolution {
            status: parsed.status,
            values: if parsed.status.has_solution() { parsed.values } else { Vec::new() },
            objective,
            bound: f64::NAN,
            nodes: 0,
            lp_iterations: 0,
        })
    }
}

fn sanitize(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect();
    if s.is_empty() {
        "model".into()
    } else {
        s
    }
}

fn status_word(word: &str) -> Option<SolveStatus> {
    Some(match word.to_ascii_lowercase().as_str() {
        "optimal" => SolveStatus::Optimal,
        "feasible" | "feasible-with-gap" => SolveStatus::FeasibleWithGap,
        "infeasible" => SolveStatus::Infeasible,
        "time-limit" | "timelimit" => SolveStatus::TimeLimit,
        "no-solution" => SolveStatus::NoSolution,
        _ => return None,
    })
}

/// Parses a solution file in the simple or CBC format. Variables not listed
/// are zero.
pub fn parse_solution(text: &str, model: &Model) -> Result<ParsedSolution> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.to_ascii_lowercase().contains("objective value") => parse_cbc(text, model),
        _ => parse_simple(text, model),
    }
}

fn lookup(model: &Model, name: &str, line: usize) -> Result<usize> {
    model
        .var_id(name)
        .map(|v| v.0)
        .ok_or_else(|| MilpError::SolutionParse { line, message: format!("unknown variable `{name}`") })
}

fn parse_value(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| MilpError::SolutionParse { line, message: format!("bad number `{s}`") })
}

fn parse_simple(text: &str, model: &Model) -> Result<ParsedSolution> {
    let mut values = vec![0.0; model.num_vars()];
    let mut status = SolveStatus::Optimal;
    let mut objective = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let (Some(key), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::SolutionParse { line, message: format!("expected `name value`, got `{content}`") });
        };
        if key.eq_ignore_ascii_case("status") && model.var_id(key).is_none() {
            status = status_word(val)
                .ok_or_else(|| MilpError::SolutionParse { line, message: format!("unknown status `{val}`") })?;
        } else if key.eq_ignore_ascii_case("objective") && model.var_id(key).is_none() {
            objective = Some(parse_value(val, line)?);
        } else {
            values[lookup(model, key, line)?] = parse_value(val, line)?;
        }
    }
    Ok(ParsedSolution { status, objective, values })
}

fn parse_cbc(text: &str, model: &Model) -> Result<ParsedSolution> {
    let mut values = vec![0.0; model.num_vars()];
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().expect("caller checked non-empty");
    let h = header.trim().to_ascii_lowercase();
    let status = if h.starts_with("optimal") {
        SolveStatus::Optimal
    } else if h.contains("infeasible") {
        SolveStatus::Infeasible
    } else if h.starts_with("stopped on time") {
        SolveStatus::TimeLimit
    } else if h.starts_with("stopped") {
        SolveStatus::FeasibleWithGap
    } else {
        return Err(MilpError::SolutionParse {
            line: 1,
            message: format!("unrecognized CBC status `{}`", header.trim()),
        });
    };
    let objective = h.rsplit("objective value").next().and_then(|s| s.trim().parse().ok());
    for (i, raw) in lines {
        let line = i + 1;
        let t = raw.trim().trim_start_matches("**").trim();
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() < 3 {
            return Err(MilpError::SolutionParse { line, message: format!("short CBC line `{t}`") });
        }
        values[lookup(model, parts[1], line)?] = parse_value(parts[2], line)?;
    }
    Ok(ParsedSolution { status, objective, values })
}

/// Writes `values` in the simple format understood by [`parse_solution`].
pub fn write_simple_solution(model: &Model, status: SolveStatus, objective: f64, values: &[f64]) -> String {
    let mut out = format!("# solution for {}\nstatus {}\n", model.name, status.as_str());
    if objective.is_finite() {
        out.push_str(&format!("objective {objective}\n"));
    }
    for (v, x) in model.vars().iter().zip(values) {
        out.push_str(&format!("{} {}\n", v.name, x));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VarKind;

    fn model() -> Model {
        let mut m = Model::new("t");
        m.add_continuous("x", 1.0).unwrap();
        m.add_var("b_1", 0.0, 1.0, VarKind::Binary, 2.0).unwrap();
        m
    }

    #[test]
    fn parses_simple_format() {
        let p = parse_solution("# c\nstatus optimal\nobjective 3\nx 1.0\nb_1 1 # set\n", &model()).unwrap();
        assert_eq!(p.status, SolveStatus::Optimal);
        assert_eq!(p.objective, Some(3.0));
        assert_eq!(p.values, vec![1.0, 1.0]);
    }

    #[test]
    fn parses_cbc_format() {
        let text = "Optimal - objective value 2.00000000\n      1 b_1                      1                       2\n";
        let p = parse_solution(text, &model()).unwrap();
        assert_eq!(p.status, SolveStatus::Optimal);
        assert_eq!(p.objective, Some(2.0));
        assert_eq!(p.values, vec![0.0, 1.0]);
        let inf = parse_solution("Infeasible - objective value 0.0\n", &model()).unwrap();
        assert_eq!(inf.status, SolveStatus::Infeasible);
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(parse_solution("zz 1\n", &model()).is_err());
    }

    #[test]
    fn simple_writer_round_trips() {
        let m = model();
        let text = write_simple_solution(&m, SolveStatus::FeasibleWithGap, 4.5, &[0.25, 1.0]);
        let p = parse_solution(&text, &m).unwrap();
        assert_eq!(
            p,
            ParsedSolution { status: SolveStatus::FeasibleWithGap, objective: Some(4.5), values: vec![0.25, 1.0] }
        );
    }
}
