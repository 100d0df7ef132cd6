//! In-memory representation of a mixed 0-1 linear program.
//!
//! A [`Model`] is a list of named variables (continuous or binary, each with
//! bounds and an objective coefficient) and a list of named sparse rows with a
//! sense and a right-hand side. Variables are referenced by [`VarId`], which is
//! the insertion index.

use std::collections::HashMap;
use std::fmt;

use crate::error::{MilpError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub sense: ObjectiveSense,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    var_index: HashMap<String, VarId>,
    row_index: HashMap<String, RowId>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.sense == other.sense && self.vars == other.vars && self.rows == other.rows
    }
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            sense: ObjectiveSense::Minimize,
            vars: Vec::new(),
            rows: Vec::new(),
            var_index: HashMap::new(),
            row_index: HashMap::new(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
        objective: f64,
    ) -> Result<VarId> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        if self.var_index.contains_key(&name) {
            return Err(MilpError::DuplicateVariable(name));
        }
        let id = VarId(self.vars.len());
        self.var_index.insert(name.clone(), id);
        self.vars.push(Variable { name, lower, upper, kind, objective });
        Ok(id)
    }

    /// Nonnegative continuous variable.
    pub fn add_continuous(&mut self, name: impl Into<String>, objective: f64) -> Result<VarId> {
        self.add_var(name, 0.0, f64::INFINITY, VarKind::Continuous, objective)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> Result<VarId> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary, objective)
    }

    /// Adds a row; repeated variables in `terms` are merged and zero
    /// coefficients dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId> {
        let name = name.into();
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in terms {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVariable { row: name, index: v.0 });
            }
            match merged.iter_mut().find(|t| t.0 == v) {
                Some(t) => t.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        if self.row_index.contains_key(&name) {
            return Err(MilpError::DuplicateRow(name));
        }
        let id = RowId(self.rows.len());
        self.row_index.insert(name.clone(), id);
        self.rows.push(Row { name, terms: merged, sense, rhs });
        Ok(id)
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: f64) {
        self.vars[var.0].objective = coefficient;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &Row {
        &self.rows[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn row_id(&self, name: &str) -> Option<RowId> {
        self.row_index.get(name).copied()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(i, _)| VarId(i))
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.objective * x).sum()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} vars ({} binary), {} rows, {} nonzeros",
            self.name,
            self.vars.len(),
            self.binaries().count(),
            self.rows.len(),
            self.num_nonzeros()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicate_terms() {
        let mut m = Model::new("t");
        let x = m.add_continuous("x", 1.0).unwrap();
        let y = m.add_continuous("y", 0.0).unwrap();
        let r = m.add_row("r", [(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], Sense::Le, 4.0).unwrap();
        assert_eq!(m.row(r).terms, vec![(x, 4.0)]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = Model::new("t");
        m.add_continuous("x", 1.0).unwrap();
        assert!(matches!(m.add_continuous("x", 0.0), Err(MilpError::DuplicateVariable(_))));
        assert!(matches!(m.add_var("z", 2.0, 1.0, VarKind::Continuous, 0.0), Err(MilpError::InvalidBounds { .. })));
        assert!(matches!(m.add_row("r", [(VarId(7), 1.0)], Sense::Eq, 0.0), Err(MilpError::UnknownVariable { .. })));
    }

    #[test]
    fn violation_by_sense() {
        let row = Row { name: "r".into(), terms: vec![(VarId(0), 2.0)], sense: Sense::Ge, rhs: 3.0 };
        assert_eq!(row.violation(&[1.0]), 1.0);
        assert_eq!(row.violation(&[2.0]), 0.0);
        let eq = Row { sense: Sense::Eq, ..row };
        assert_eq!(eq.violation(&[2.0]), 1.0);
    }
}
