use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Handle to a variable of a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// Sparse linear expression without a constant term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, var: VarId, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn with(mut self, var: VarId, coef: f64) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Merges duplicate variables and drops zero coefficients, keeping first-seen order.
    pub fn normalized(&self) -> LinExpr {
        let mut pos: HashMap<VarId, usize> = HashMap::new();
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &(v, c) in &self.terms {
            match pos.get(&v) {
                Some(&i) => terms[i].1 += c,
                None => {
                    pos.insert(v, terms.len());
                    terms.push((v, c));
                }
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        LinExpr { terms }
    }
}

impl FromIterator<(VarId, f64)> for LinExpr {
    fn from_iter<I: IntoIterator<Item = (VarId, f64)>>(iter: I) -> Self {
        LinExpr { terms: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Signed amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization mixed-integer linear program over binary and continuous variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
    names: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> VarId {
        assert!(!self.names.contains_key(&name), "duplicate variable name `{name}`");
        let id = VarId(self.variables.len());
        self.names.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lower, upper });
        id
    }

    /// Adds a binary variable. Panics on a duplicate name.
    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.push_var(name.into(), VarKind::Binary, 0.0, 1.0)
    }

    /// Adds a continuous variable with bounds `[lower, upper]`; either may be infinite.
    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.push_var(name.into(), VarKind::Continuous, lower, upper)
    }

    /// Adds a constraint named `c<k>` where `k` is its 1-based position.
    pub fn add_constraint(&mut self, expr: LinExpr, relation: Relation, rhs: f64) -> usize {
        let name = format!("c{}", self.constraints.len() + 1);
        self.add_named_constraint(name, expr, relation, rhs)
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), expr, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn num_continuous(&self) -> usize {
        self.num_vars() - self.num_binaries()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Checks every reference and bound.
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let check = |expr: &LinExpr, what: &str| -> Result<()> {
            for &(v, c) in &expr.terms {
                if v.0 >= n {
                    return Err(Error::MalformedModel(format!(
                        "{what} references variable #{} but the model has {n}",
                        v.0
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::MalformedModel(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.expr, &format!("constraint {i} (`{}`)", c.name))?;
            if !c.rhs.is_finite() {
                return Err(Error::MalformedModel(format!("constraint `{}` has a non-finite rhs", c.name)));
            }
        }
        for v in &self.variables {
            if v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0) {
                return Err(Error::MalformedModel(format!("binary `{}` must have bounds [0,1]", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::MalformedModel(format!("variable `{}` has empty bounds", v.name)));
            }
        }
        Ok(())
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.eval(values)
    }

    /// First constraint violated by more than `tol`, as `(index, violation)`.
    pub fn first_violation(&self, values: &[f64], tol: f64) -> Option<(usize, f64)> {
        self.constraints.iter().enumerate().map(|(i, c)| (i, c.violation(values))).find(|&(_, v)| v > tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Feasible => "Feasible",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::TimeLimit => "TimeLimit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Optimal" => Ok(SolveStatus::Optimal),
            "Feasible" => Ok(SolveStatus::Feasible),
            "Infeasible" => Ok(SolveStatus::Infeasible),
            "TimeLimit" => Ok(SolveStatus::TimeLimit),
            other => Err(Error::InvalidInput(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Values indexed by [`VarId`]; `None` when no incumbent exists.
    pub assignment: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    /// Relative gap between `objective` and `best_bound`.
    pub gap: f64,
    pub nodes: u64,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn has_incumbent(&self) -> bool {
        self.assignment.is_some()
    }

    pub fn value(&self, var: VarId) -> Option<f64> {
        self.assignment.as_ref().map(|a| a[var.0])
    }
}

/// Relative gap `(incumbent - bound) / max(|incumbent|, 1e-10)`, clamped at 0.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    if !bound.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1e-10)).max(0.0)
}
