//! Independent feasibility check of a candidate point against a [`Model`].

use crate::model::{Model, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Bound,
    Integrality,
    Row,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub name: String,
    pub amount: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub max_violation: f64,
    pub rows_checked: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks bounds, integrality of binaries and every row at absolute
/// tolerance `tol`.
pub fn validate(model: &Model, values: &[f64], tol: f64) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let record = |rep: &mut ValidationReport, kind, name: &str, amount: f64| {
        rep.max_violation = rep.max_violation.max(amount);
        if amount > tol || amount.is_nan() {
            rep.violations.push(Violation { kind, name: name.to_string(), amount });
        }
    };
    if values.len() != model.num_vars() {
        rep.violations.push(Violation {
            kind: ViolationKind::Bound,
            name: format!("expected {} values, got {}", model.num_vars(), values.len()),
            amount: f64::INFINITY,
        });
        rep.max_violation = f64::INFINITY;
        return rep;
    }
    for (v, &x) in model.vars().iter().zip(values) {
        let b = (v.lower - x).max(x - v.upper).max(0.0);
        record(&mut rep, ViolationKind::Bound, &v.name, if x.is_nan() { f64::NAN } else { b });
        if v.kind == VarKind::Binary {
            record(&mut rep, ViolationKind::Integrality, &v.name, (x - x.round()).abs());
        }
    }
    for r in model.rows() {
        record(&mut rep, ViolationKind::Row, &r.name, r.violation(values));
        rep.rows_checked += 1;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    #[test]
    fn flags_each_kind() {
        let mut m = Model::new("t");
        let x = m.add_binary("x", 1.0).unwrap();
        let y = m.add_var("y", 0.0, 2.0, VarKind::Continuous, 0.0).unwrap();
        m.add_row("r", [(x, 1.0), (y, 1.0)], Sense::Le, 2.0).unwrap();
        assert!(validate(&m, &[1.0, 1.0], 1e-6).is_valid());
        let rep = validate(&m, &[0.5, 2.5], 1e-6);
        let kinds: Vec<_> = rep.violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Integrality, ViolationKind::Bound, ViolationKind::Row]);
        assert!((rep.max_violation - 1.0).abs() < 1e-12);
    }
}
