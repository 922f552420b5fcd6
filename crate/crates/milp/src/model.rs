//! Generic mixed-integer linear program: variables with bounds and
//! integrality, linear constraints and a linear minimization objective.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::error::ModelError;

/// Dense variable index. Ids are assigned in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Dense constraint index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Var {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    pub name: String,
    /// Terms sorted by variable id, one entry per variable.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization MILP assembled through the builder methods.
///
/// Names are unique per kind (variables and constraints have separate
/// namespaces). Coefficients of repeated variables are merged on insert and
/// exact zeros are dropped, so every stored row is canonical.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    name: String,
    vars: Vec<Var>,
    constraints: Vec<LinConstraint>,
    objective: Option<Vec<(VarId, f64)>>,
    var_index: HashMap<String, VarId>,
    constraint_names: HashSet<String>,
    symbols: BTreeMap<String, String>,
}

fn check_finite(what: &str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite(format!("{what} = {value}")))
    }
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateVar(name));
        }
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(ModelError::NonFinite(format!("bounds of {name}")));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        if lower > upper {
            return Err(ModelError::EmptyDomain { var: name, lower, upper });
        }
        let id = VarId(self.vars.len());
        self.var_index.insert(name.clone(), id);
        self.vars.push(Var { name, kind, lower, upper });
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    fn canonical_terms(&self, terms: &[(VarId, f64)]) -> Result<Vec<(VarId, f64)>, ModelError> {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(var, coef) in terms {
            if var.0 >= self.vars.len() {
                return Err(ModelError::UnknownVar(var.0));
            }
            check_finite(&format!("coefficient of {}", self.vars[var.0].name), coef)?;
            *merged.entry(var).or_insert(0.0) += coef;
        }
        Ok(merged.into_iter().filter(|&(_, c)| c != 0.0).collect())
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: &[(VarId, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName);
        }
        if self.constraint_names.contains(&name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        check_finite(&format!("rhs of {name}"), rhs)?;
        let terms = self.canonical_terms(terms)?;
        self.constraint_names.insert(name.clone());
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(LinConstraint { name, terms, sense, rhs });
        Ok(id)
    }

    pub fn set_objective(&mut self, terms: &[(VarId, f64)]) -> Result<(), ModelError> {
        let terms = self.canonical_terms(terms)?;
        self.objective = Some(terms);
        Ok(())
    }

    /// Records which paper-level symbol a family of variable names stands
    /// for, e.g. `"F[n,v,s]"` -> `"F_n^{v,s}"`.
    pub fn register_symbol(&mut self, pattern: impl Into<String>, symbol: impl Into<String>) {
        self.symbols.insert(pattern.into(), symbol.into());
    }

    pub fn symbols(&self) -> &BTreeMap<String, String> {
        &self.symbols
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Var {
        &self.vars[id.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&[(VarId, f64)]> {
        self.objective.as_deref()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.is_binary()).count()
    }

    /// Number of constraints whose name starts with `prefix`.
    pub fn count_constraints_with_prefix(&self, prefix: &str) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .count()
    }

    /// Objective value of an assignment (no feasibility check).
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|&(v, c)| c * values[v.0])
            .sum()
    }

    /// Full consistency check; the builder already enforces most of this,
    /// so a failure here means the model was mutated through a clone of
    /// stale data or deserialized from elsewhere.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.objective.is_none() {
            return Err(ModelError::ObjectiveUnset);
        }
        for var in &self.vars {
            if var.lower.is_nan() || var.upper.is_nan() || var.lower > var.upper {
                return Err(ModelError::EmptyDomain {
                    var: var.name.clone(),
                    lower: var.lower,
                    upper: var.upper,
                });
            }
        }
        let n = self.vars.len();
        let rows = self
            .constraints
            .iter()
            .map(|c| (c.name.as_str(), c.terms.as_slice(), Some(c.rhs)))
            .chain(std::iter::once((
                "objective",
                self.objective.as_deref().unwrap_or(&[]),
                None,
            )));
        for (name, terms, rhs) in rows {
            if let Some(rhs) = rhs {
                check_finite(&format!("rhs of {name}"), rhs)?;
            }
            let mut seen = HashSet::new();
            for &(v, c) in terms {
                if v.0 >= n {
                    return Err(ModelError::UnknownVar(v.0));
                }
                check_finite(&format!("coefficient in {name}"), c)?;
                if !seen.insert(v) {
                    return Err(ModelError::DuplicateTerm {
                        constraint: name.to_string(),
                        var: self.vars[v.0].name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Overrides the bounds of an existing variable.
    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let var = self
            .vars
            .get_mut(id.0)
            .ok_or(ModelError::UnknownVar(id.0))?;
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::EmptyDomain {
                var: var.name.clone(),
                lower,
                upper,
            });
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_var_gets_unit_bounds() {
        let mut m = MilpModel::new("t");
        let f = m.add_binary("F[3]").unwrap();
        assert_eq!(f, VarId(0));
        assert_eq!((m.var(f).lower, m.var(f).upper), (0.0, 1.0));
        assert!(m.var(f).is_binary());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = MilpModel::new("t");
        m.add_binary("x").unwrap();
        assert!(matches!(m.add_binary("x"), Err(ModelError::DuplicateVar(_))));
        let x = m.var_by_name("x").unwrap();
        m.add_constraint("c", &[(x, 1.0)], Sense::Le, 1.0).unwrap();
        assert!(matches!(
            m.add_constraint("c", &[(x, 1.0)], Sense::Le, 1.0),
            Err(ModelError::DuplicateConstraint(_))
        ));
    }

    #[test]
    fn unknown_var_in_constraint_rejected() {
        let mut m = MilpModel::new("t");
        m.add_binary("x").unwrap();
        let err = m
            .add_constraint("c", &[(VarId(7), 1.0)], Sense::Ge, 0.0)
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownVar(7));
    }

    #[test]
    fn coefficients_merge_and_zeros_drop() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_constraint("c", &[(y, 1.0), (x, 2.0), (x, 3.0), (y, -1.0)], Sense::Eq, 1.0)
            .unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(x, 5.0)]);
    }

    #[test]
    fn non_finite_values_rejected() {
        let mut m = MilpModel::new("t");
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        assert!(matches!(
            m.add_constraint("c", &[(x, f64::NAN)], Sense::Le, 1.0),
            Err(ModelError::NonFinite(_))
        ));
        assert!(matches!(
            m.add_constraint("d", &[(x, 1.0)], Sense::Le, f64::INFINITY),
            Err(ModelError::NonFinite(_))
        ));
        assert!(matches!(
            m.add_continuous("z", f64::NAN, 1.0),
            Err(ModelError::NonFinite(_))
        ));
    }

    #[test]
    fn validate_requires_objective() {
        let mut m = MilpModel::new("t");
        m.add_binary("x").unwrap();
        assert_eq!(m.validate(), Err(ModelError::ObjectiveUnset));
        m.set_objective(&[]).unwrap();
        assert_eq!(m.validate(), Ok(()));
    }
}
