//! Fair training of 0-1-loss classifiers: a master MILP over the classifier's
//! predictions, an auditor that looks for a violating subgroup, and one linear
//! cut per violation until the auditor finds none.

mod cuts;
mod dnf;
mod eval;
mod linear;
mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auditor::{AuditError, SubgroupClass, ORACLE_TIME_LIMIT};
use crate::dataset::{AuditDataset, DatasetError};
use crate::exec::Exec;
use crate::metrics::{Measure, MetricsError};
use crate::milp::{LinExpr, MilpError, MilpModel, Solver, VarId};

pub use cuts::{render_cut, FairnessCut, SdCutAux};
pub use dnf::build_master_dnf;
pub use eval::{evaluate, evaluate_predictions, Evaluation, WorstViolation};
pub use linear::build_master_linear;
pub use run::{train, IterationRecord, TrainResult, TrainStatus, TrainTimings};

/// Fairness threshold used when none is given.
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_MAX_CUTS: usize = 50;
/// Strictness gap of linear classifiers.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Coefficients at or below this magnitude count as zero.
pub const ZERO_COEF: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training needs both classes in the data")]
    SingleClassDataset,
    #[error("feature `{0}` is not binary; DNF models need 0/1 features")]
    NonBinaryFeatures(String),
    #[error("the cut has no members to constrain")]
    VacuousCut,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model does not fit the dataset: {0}")]
    ModelMismatch(String),
    #[error("the master problem found no solution within its time limit")]
    NoIncumbent,
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Dnf,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "dnf" => Ok(ModelKind::Dnf),
            _ => Err(format!("unknown model `{s}` (expected linear or dnf)")),
        }
    }
}

/// Which measure the auditor maximizes while looking for violators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    SameAsCut,
    /// SD between predicted classes (on `y = 0` rows for FPSF cuts).
    SdProxy,
}

impl std::str::FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "same" | "same-as-cut" => Ok(OracleKind::SameAsCut),
            "sd" | "sd-proxy" => Ok(OracleKind::SdProxy),
            _ => Err(format!("unknown oracle `{s}` (expected same or sd)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub model: ModelKind,
    /// Clause count of a DNF.
    pub clauses: usize,
    /// Sparsity weight of a linear model.
    pub sparsity: f64,
    pub eps: f64,
    pub cut_kind: Measure,
    pub oracle_kind: OracleKind,
    pub subgroup_class: SubgroupClass,
    pub gamma: f64,
    /// Seconds per master solve.
    pub master_time_limit: Option<f64>,
    /// Seconds per audit.
    pub oracle_time_limit: Option<f64>,
    /// Seconds for the whole loop.
    pub time_limit: Option<f64>,
    pub max_cuts: usize,
    pub solver: Solver,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Linear,
            clauses: 1,
            sparsity: 0.0,
            eps: DEFAULT_EPS,
            cut_kind: Measure::FPSF,
            oracle_kind: OracleKind::SameAsCut,
            subgroup_class: SubgroupClass::Conjunction,
            gamma: DEFAULT_GAMMA,
            master_time_limit: None,
            oracle_time_limit: Some(ORACLE_TIME_LIMIT),
            time_limit: None,
            max_cuts: DEFAULT_MAX_CUTS,
            solver: Solver::Builtin,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be a finite number ≥ 0");
        }
        if self.max_cuts == 0 {
            return bad("max_cuts must be at least 1");
        }
        if self.clauses == 0 {
            return bad("a DNF needs at least one clause");
        }
        if !(self.sparsity >= 0.0) || !self.sparsity.is_finite() {
            return bad("sparsity must be a finite number ≥ 0");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.cut_kind == Measure::SD && self.oracle_kind == OracleKind::SdProxy {
            return bad("the SD proxy applies to SPSF and FPSF cuts");
        }
        Ok(())
    }
}

/// `c·x ≥ t − ε/2` predicts 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifierSpec {
    pub c: Vec<f64>,
    pub t: f64,
    pub eps: f64,
    pub sigma: f64,
    pub feature_names: Vec<String>,
}

impl LinearClassifierSpec {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn predict_row(&self, x: &[f64]) -> bool {
        self.score(x) >= self.t - self.eps / 2.0
    }

    pub fn nonzero_count(&self) -> usize {
        self.c.iter().filter(|c| c.abs() > ZERO_COEF).count()
    }
}

/// OR of clauses, each an AND of features that must equal 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnfSpec {
    pub clauses: Vec<Vec<usize>>,
    pub feature_names: Vec<String>,
}

impl DnfSpec {
    pub fn predict_row(&self, x: &[f64]) -> bool {
        self.clauses.iter().any(|k| k.iter().all(|&j| x[j] > 0.5))
    }

    /// Readable form such as `(a ∧ b) ∨ (c)`; an empty clause is always true.
    pub fn describe(&self) -> String {
        let clause = |k: &Vec<usize>| {
            if k.is_empty() {
                "⊤".to_string()
            } else {
                let names: Vec<&str> = k.iter().map(|&j| self.feature_names[j].as_str()).collect();
                format!("({})", names.join(" ∧ "))
            }
        };
        self.clauses.iter().map(clause).collect::<Vec<_>>().join(" ∨ ")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear(LinearClassifierSpec),
    Dnf(DnfSpec),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Linear(_) => ModelKind::Linear,
            ModelSpec::Dnf(_) => ModelKind::Dnf,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            ModelSpec::Linear(m) => &m.feature_names,
            ModelSpec::Dnf(m) => &m.feature_names,
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> bool {
        match self {
            ModelSpec::Linear(m) => m.predict_row(x),
            ModelSpec::Dnf(m) => m.predict_row(x),
        }
    }

    /// Predictions for every row, after checking the feature layout matches.
    pub fn predict(&self, ds: &AuditDataset) -> Result<Vec<bool>, TrainError> {
        let names = self.feature_names();
        if names != ds.feature_names() {
            return Err(TrainError::ModelMismatch(format!(
                "model expects {} features [{}], dataset has {} [{}]",
                names.len(),
                names.join(", "),
                ds.feature_names().len(),
                ds.feature_names().join(", ")
            )));
        }
        if let ModelSpec::Dnf(m) = self {
            if m.clauses.iter().flatten().any(|&j| j >= names.len()) {
                return Err(TrainError::ModelMismatch("clause refers to a missing feature".into()));
            }
        }
        Ok(ds.features().iter().map(|x| self.predict_row(x)).collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("model spec serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        serde_json::from_value(value.clone())
    }
}

/// Rows sharing one prediction variable.
#[derive(Clone, Debug)]
pub struct MasterGroup {
    /// `ŷ` of the group's rows as an affine expression of master variables.
    pub yhat: LinExpr,
    pub rows: Vec<usize>,
    pub weight: u64,
}

#[derive(Clone, Debug)]
pub enum MasterVars {
    Linear { c: Vec<VarId>, t: VarId, s: Option<Vec<VarId>>, eps: f64, sigma: f64 },
    Dnf { u: Vec<Vec<VarId>> },
}

/// A classifier-training MILP together with the handles cuts need.
#[derive(Clone, Debug)]
pub struct Master {
    pub model: MilpModel,
    pub vars: MasterVars,
    pub groups: Vec<MasterGroup>,
    pub row_group: Vec<usize>,
    pub feature_names: Vec<String>,
    pub sd_aux: Option<SdCutAux>,
    pub cut_rows: Vec<usize>,
}

impl Master {
    /// Reads the classifier off a solution.
    pub fn extract(&self, values: &[f64]) -> ModelSpec {
        match &self.vars {
            MasterVars::Linear { c, t, eps, sigma, .. } => ModelSpec::Linear(LinearClassifierSpec {
                c: c.iter().map(|v| values[v.0]).collect(),
                t: values[t.0],
                eps: *eps,
                sigma: *sigma,
                feature_names: self.feature_names.clone(),
            }),
            MasterVars::Dnf { u } => ModelSpec::Dnf(DnfSpec {
                clauses: u
                    .iter()
                    .map(|k| (0..k.len()).filter(|&j| values[k[j].0] > 0.5).collect())
                    .collect(),
                feature_names: self.feature_names.clone(),
            }),
        }
    }

    /// Per-row `ŷ` as the master sees it.
    pub fn yhat_rows(&self, values: &[f64]) -> Vec<bool> {
        let per_group: Vec<bool> = self.groups.iter().map(|g| g.yhat.eval(values) > 0.5).collect();
        self.row_group.iter().map(|&g| per_group[g]).collect()
    }

    /// Binary assignment reproducing `yhat` where the master can express it.
    pub fn warm_start_for(&self, values: &[f64]) -> Vec<(VarId, f64)> {
        self.model.binaries().map(|v| (v, values[v.0].round())).collect()
    }
}

/// Groups rows by `key`, in first-appearance order.
pub(crate) fn group_rows<K: Eq + std::hash::Hash + Clone>(n: usize, key: impl Fn(usize) -> K) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut index: std::collections::HashMap<K, usize> = std::collections::HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut row_group = vec![0; n];
    for i in 0..n {
        let g = *index.entry(key(i)).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
        row_group[i] = g;
    }
    (groups, row_group)
}

/// Hashable image of a feature row.
pub(crate) fn feature_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

pub(crate) fn class_masses(ds: &AuditDataset) -> Result<(f64, f64), TrainError> {
    let (n0, n1) = ds.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(TrainError::SingleClassDataset);
    }
    Ok((n0 as f64, n1 as f64))
}
