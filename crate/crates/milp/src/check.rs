//! Feasibility checker that re-evaluates a model against an assignment.
//!
//! Works directly on the model's stored rows so that it can vouch for
//! answers coming from the simplex or from an external solver alike.

use std::fmt;

use crate::model::{MilpModel, Sense};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    WrongLength { expected: usize, got: usize },
    NotFinite { var: String },
    Bound { var: String, value: f64, lower: f64, upper: f64 },
    Integrality { var: String, value: f64 },
    Row { constraint: String, activity: f64, sense: Sense, rhs: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongLength { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
            Violation::NotFinite { var } => write!(f, "{var} is not finite"),
            Violation::Bound { var, value, lower, upper } => {
                write!(f, "{var} = {value} outside [{lower}, {upper}]")
            }
            Violation::Integrality { var, value } => write!(f, "{var} = {value} is not binary"),
            Violation::Row { constraint, activity, sense, rhs } => write!(
                f,
                "{constraint}: activity {activity} violates {} {rhs}",
                sense.symbol()
            ),
        }
    }
}

/// Checks bounds, integrality and every row.
///
/// Row violations are measured relative to the row's largest coefficient
/// (`|violation| <= tol * max(1, max|a|)`), which is the scale the simplex
/// works in.
pub fn check_solution(model: &MilpModel, values: &[f64], tol: f64) -> Result<(), Violation> {
    if values.len() != model.num_vars() {
        return Err(Violation::WrongLength {
            expected: model.num_vars(),
            got: values.len(),
        });
    }
    for (var, &v) in model.vars().iter().zip(values) {
        if !v.is_finite() {
            return Err(Violation::NotFinite { var: var.name.clone() });
        }
        if v < var.lower - tol || v > var.upper + tol {
            return Err(Violation::Bound {
                var: var.name.clone(),
                value: v,
                lower: var.lower,
                upper: var.upper,
            });
        }
        if var.is_binary() && (v - v.round()).abs() > tol {
            return Err(Violation::Integrality { var: var.name.clone(), value: v });
        }
    }
    for con in model.constraints() {
        let mut activity = 0.0;
        let mut scale = 1.0_f64;
        for &(var, coef) in &con.terms {
            activity += coef * values[var.0];
            scale = scale.max(coef.abs());
        }
        let slack = tol * scale;
        let ok = match con.sense {
            Sense::Le => activity <= con.rhs + slack,
            Sense::Ge => activity >= con.rhs - slack,
            Sense::Eq => (activity - con.rhs).abs() <= slack,
        };
        if !ok {
            return Err(Violation::Row {
                constraint: con.name.clone(),
                activity,
                sense: con.sense,
                rhs: con.rhs,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MilpModel {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x").unwrap();
        let y = m.add_continuous("y", 0.0, 4.0).unwrap();
        m.add_constraint("cap", &[(x, 2.0), (y, 1.0)], Sense::Le, 3.0).unwrap();
        m.add_constraint("cover", &[(x, 1.0), (y, 1.0)], Sense::Ge, 1.0).unwrap();
        m.set_objective(&[(y, 1.0)]).unwrap();
        m
    }

    #[test]
    fn accepts_feasible_point() {
        assert_eq!(check_solution(&small(), &[1.0, 0.5], 1e-6), Ok(()));
    }

    #[test]
    fn rejects_each_kind_of_violation() {
        let m = small();
        assert!(matches!(
            check_solution(&m, &[0.5, 0.5], 1e-6),
            Err(Violation::Integrality { .. })
        ));
        assert!(matches!(
            check_solution(&m, &[0.0, 5.0], 1e-6),
            Err(Violation::Bound { .. })
        ));
        assert!(matches!(
            check_solution(&m, &[1.0, 2.0], 1e-6),
            Err(Violation::Row { ref constraint, .. }) if constraint == "cap"
        ));
        assert!(matches!(
            check_solution(&m, &[0.0, 0.0], 1e-6),
            Err(Violation::Row { ref constraint, .. }) if constraint == "cover"
        ));
        assert!(matches!(
            check_solution(&m, &[0.0], 1e-6),
            Err(Violation::WrongLength { .. })
        ));
    }
}
