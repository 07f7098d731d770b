//! Mixed-binary linear programs: model representation, a built-in exact
//! branch-and-bound solver, and an LP-file bridge for external solvers.

mod bnb;
mod external;
pub mod lp_format;
mod simplex;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::solve;
pub use external::INFEASIBLE_MARKER;
pub use lp_format::{export_lp, import_solution, parse_lp, write_solution};

/// Constraint feasibility tolerance used for every accepted point.
pub const FEAS_TOL: f64 = 1e-7;
/// Distance from {0,1} within which a binary counts as integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("model is unbounded")]
    Unbounded,
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("point violates constraint `{0}`")]
    InfeasiblePoint(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("cannot parse LP/solution text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("external solver failed: {0}")]
    External(String),
}

/// Which engine runs a [`MilpModel`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Solver {
    #[default]
    Builtin,
    /// Executable called as `<path> <model.lp> <solution.sol>`.
    External(PathBuf),
}

impl Solver {
    pub fn solve(&self, model: &MilpModel) -> Result<MilpSolution, MilpError> {
        match self {
            Solver::Builtin => solve(model),
            Solver::External(path) => external::solve_external(path, model),
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "builtin" => Ok(Solver::Builtin),
            _ => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Ok(Solver::External(PathBuf::from(p))),
                _ => Err(format!("solver must be `builtin` or `external:<path>`, got `{s}`")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// Affine expression over model variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) -> &mut Self {
        if factor != 0.0 {
            for &(v, c) in &other.terms {
                self.terms.push((v, c * factor));
            }
            self.constant += other.constant * factor;
        }
        self
    }

    pub fn scaled(&self, factor: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_scaled(self, factor);
        out
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Merges duplicate variables and drops zero coefficients.
    pub fn compact(&self) -> Vec<(VarId, f64)> {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        acc.into_iter().filter(|&(_, c)| c != 0.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    /// Wall-clock budget in seconds; `None` runs to completion.
    pub time_limit: Option<f64>,
    pub gap_tolerance: f64,
    /// Binary assignment used to seed the incumbent.
    pub warm_start: Option<Vec<(VarId, f64)>>,
}

impl MilpModel {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense, terms: Vec::new(), constant: 0.0 },
            time_limit: None,
            gap_tolerance: 1e-9,
            warm_start: None,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.variables.push(Variable { name: name.into(), kind, lower, upper });
        VarId(self.variables.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    /// Adds `expr sense rhs`; the expression's constant moves to the right-hand side.
    pub fn add_constraint(&mut self, tag: impl Into<String>, expr: &LinExpr, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            terms: expr.compact(),
            sense,
            rhs: rhs - expr.constant,
            tag: tag.into(),
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, sense: ObjectiveSense, expr: &LinExpr) {
        self.objective = Objective { sense, terms: expr.compact(), constant: expr.constant };
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.constant + self.objective.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(MilpError::MalformedModel(format!("duplicate variable name `{}`", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(MilpError::MalformedModel(format!("bad bounds on `{}`", v.name)));
            }
        }
        let n = self.variables.len();
        let check_terms = |terms: &[(VarId, f64)], what: &str| -> Result<(), MilpError> {
            for &(v, c) in terms {
                if v.0 >= n {
                    return Err(MilpError::MalformedModel(format!("{what} references missing variable {}", v.0)));
                }
                if !c.is_finite() {
                    return Err(MilpError::MalformedModel(format!("{what} has a non-finite coefficient")));
                }
            }
            Ok(())
        };
        for c in &self.constraints {
            check_terms(&c.terms, &format!("constraint `{}`", c.tag))?;
            if !c.rhs.is_finite() {
                return Err(MilpError::MalformedModel(format!("constraint `{}` has a non-finite rhs", c.tag)));
            }
        }
        check_terms(&self.objective.terms, "objective")?;
        if let Some(ws) = &self.warm_start {
            check_terms(ws, "warm start")?;
        }
        Ok(())
    }

    /// Checks bounds, integrality, and every row at the fixed tolerances.
    pub fn check_point(&self, values: &[f64]) -> Result<(), MilpError> {
        if values.len() != self.variables.len() {
            return Err(MilpError::MalformedModel("point has wrong dimension".into()));
        }
        for (v, &x) in self.variables.iter().zip(values) {
            if x < v.lower - FEAS_TOL || x > v.upper + FEAS_TOL {
                return Err(MilpError::InfeasiblePoint(format!("bounds of {}", v.name)));
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > INT_TOL {
                return Err(MilpError::InfeasiblePoint(format!("integrality of {}", v.name)));
            }
        }
        for c in &self.constraints {
            if c.violation(values) > FEAS_TOL {
                return Err(MilpError::InfeasiblePoint(c.tag.clone()));
            }
        }
        Ok(())
    }

    pub fn name_index(&self) -> HashMap<&str, VarId> {
        self.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), VarId(i))).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Incumbent values indexed by `VarId`; empty when no incumbent exists.
    pub values: Vec<f64>,
    pub objective_value: Option<f64>,
    /// Proven bound on the optimum in the objective's sense.
    pub best_bound: f64,
    pub nodes: usize,
    /// Objective of the warm start, when it was accepted as the first incumbent.
    pub warm_start_objective: Option<f64>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn named_values(&self, model: &MilpModel) -> BTreeMap<String, f64> {
        model
            .variables
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }
}
