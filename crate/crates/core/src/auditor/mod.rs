//! Most-unfair-subgroup search: a specialized branch-and-bound for
//! conjunctions, mixed-binary formulations for conjunctions and linear
//! threshold groups, and a γ-check built on either.

mod bnb;
mod formulation;
mod warm;

use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{AttributeGroup, AuditDataset, DatasetError};
use crate::exec::Exec;
use crate::metrics::{self, Measure, MetricsError, PredictionVector, SignedWeights};
use crate::milp::{MilpError, SolveStatus, Solver};
use crate::subgroups::{membership, Subgroup};

pub use bnb::audit_conjunction_bnb_with;
pub use formulation::{
    audit_conjunction_milp_with, audit_linear_milp_with, conjunction_model, linear_model, AuditModel,
};
pub use warm::logistic_warm_start;

/// Seconds allowed for a stand-alone detection run.
pub const DETECTION_TIME_LIMIT: f64 = 600.0;
/// Seconds allowed when an audit serves as the training oracle.
pub const ORACLE_TIME_LIMIT: f64 = 300.0;
/// Strictness gap between members and non-members in linear groups.
pub const LINEAR_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("the dataset has no protected attributes")]
    NoAttributes,
}

impl AuditError {
    pub fn is_empty_conditional(&self) -> bool {
        matches!(self, AuditError::Metrics(MetricsError::EmptyConditional))
    }
}

/// What the auditor maximizes: `|Σ_{i∈S} a_i|` for the measure's signed weights.
#[derive(Clone, Debug)]
pub struct AuditObjective {
    pub kind: Measure,
    pub weights: SignedWeights,
    /// Only subgroups with value at least this are acceptable.
    pub gamma_floor: Option<f64>,
    /// Stop at the first acceptable subgroup instead of maximizing.
    pub feasibility_only: bool,
    pub big_m: f64,
    /// Smallest member weight a returned subgroup may have.
    pub n_min: u64,
}

impl AuditObjective {
    /// Builds the objective, checking that the needed conditionals are nonempty.
    pub fn new(ds: &AuditDataset, yhat: &PredictionVector, kind: Measure) -> Result<Self, AuditError> {
        if ds.groups().is_empty() {
            return Err(AuditError::NoAttributes);
        }
        let weights = SignedWeights::for_measure(kind, ds, yhat)?;
        let d = weights.denominators;
        let big_m = match kind {
            Measure::SD => 2.0,
            Measure::SPSF | Measure::FPSF => {
                if d.p_h <= 0.0 || d.p_h >= 1.0 {
                    return Err(MetricsError::EmptyConditional.into());
                }
                let tight = match kind {
                    Measure::SPSF => 2.0 * d.p_h * d.p_hbar,
                    _ => 2.0 * d.p_y0 * d.p_h * d.p_hbar,
                };
                tight.min(2.0)
            }
        };
        Ok(Self { kind, weights, gamma_floor: None, feasibility_only: false, big_m, n_min: 0 })
    }

    pub fn with_gamma_floor(mut self, floor: f64, feasibility_only: bool) -> Self {
        self.gamma_floor = Some(floor);
        self.feasibility_only = feasibility_only;
        self
    }

    pub fn with_n_min(mut self, n_min: u64) -> Self {
        self.n_min = n_min;
        self
    }

    /// Upper bound on any subgroup's value, half the big-M.
    pub fn max_value(&self) -> f64 {
        self.big_m / 2.0
    }

    /// Smallest integer sum meeting the floor.
    pub(crate) fn floor_units(&self) -> Option<i128> {
        self.gamma_floor.map(|g| {
            let x = g * self.weights.scale as f64;
            (x - 1e-9 * x.abs().max(1.0)).ceil() as i128
        })
    }
}

/// SD, SPSF and FPSF of one subgroup; `None` where a measure is undefined.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeasureValues {
    pub sd: Option<f64>,
    pub spsf: Option<f64>,
    pub fpsf: Option<f64>,
}

impl MeasureValues {
    pub fn compute(ds: &AuditDataset, yhat: &PredictionVector, s: &Subgroup) -> Self {
        let members = match membership(s, ds) {
            Ok(m) => m,
            Err(_) => return Self::default(),
        };
        let value = |sw: Result<SignedWeights, MetricsError>| sw.ok().map(|w| w.to_real(w.sum(&members).abs()));
        Self {
            sd: value(SignedWeights::sd_conditional(ds, yhat)),
            spsf: value(Ok(SignedWeights::spsf(ds, yhat))),
            fpsf: value(SignedWeights::fpsf(ds, yhat)),
        }
    }

    pub fn get(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::SD => self.sd,
            Measure::SPSF => self.spsf,
            Measure::FPSF => self.fpsf,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AuditResult {
    pub kind: Measure,
    /// `None` when no subgroup satisfies the constraints or none was found in time.
    pub subgroup: Option<Subgroup>,
    /// Exact value of the returned subgroup under `kind`.
    pub objective_value: f64,
    pub raw_signed: f64,
    /// 0 when the signed difference is nonnegative, 1 otherwise.
    pub sign_branch: u8,
    pub status: SolveStatus,
    pub measures: MeasureValues,
    /// Proven upper bound on the optimum.
    pub bound: f64,
    pub nodes: u64,
    /// Value of the injected starting subgroup, if the solver accepted it.
    pub warm_start_value: Option<f64>,
    pub elapsed_s: f64,
}

impl AuditResult {
    pub fn has_subgroup(&self) -> bool {
        self.subgroup.is_some()
    }

    /// JSON report; `elapsed_s` is emitted only when `timings` is set so that
    /// repeated runs produce identical bytes.
    pub fn to_json(&self, groups: &[AttributeGroup], timings: bool) -> Value {
        json!({
            "subgroup": self.subgroup.as_ref().map(|s| s.to_json(groups)),
            "description": self.subgroup.as_ref().map(|s| crate::subgroups::describe(s, groups)),
            "objective": self.objective_value,
            "kind": self.kind.name(),
            "status": status_name(self.status),
            "sign_branch": self.sign_branch,
            "measures": {
                "sd": self.measures.sd,
                "spsf": self.measures.spsf,
                "fpsf": self.measures.fpsf,
            },
            "bound": finite_or_null(self.bound),
            "nodes": self.nodes,
            "warm_start_value": self.warm_start_value,
            "elapsed_s": if timings { json!(self.elapsed_s) } else { Value::Null },
        })
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "Optimal",
        SolveStatus::Feasible => "Feasible",
        SolveStatus::Infeasible => "Infeasible",
        SolveStatus::TimeLimit => "TimeLimit",
    }
}

/// Raw outcome of a search before exact re-evaluation.
pub(crate) struct Found {
    pub subgroup: Option<Subgroup>,
    pub status: SolveStatus,
    pub bound: f64,
    pub nodes: u64,
    pub warm_start_value: Option<f64>,
}

/// Fills in a result with exact values recomputed from membership.
pub(crate) fn finish(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    found: Found,
    start: Instant,
) -> AuditResult {
    let (objective_value, raw_signed, sign_branch, measures) = match &found.subgroup {
        Some(s) => {
            let members = membership(s, ds).expect("subgroup built for this dataset");
            let units = obj.weights.sum(&members);
            (
                obj.weights.to_real(units.abs()),
                obj.weights.to_real(units),
                u8::from(units < 0),
                MeasureValues::compute(ds, yhat, s),
            )
        }
        None => (0.0, 0.0, 0, MeasureValues::default()),
    };
    AuditResult {
        kind: obj.kind,
        subgroup: found.subgroup,
        objective_value,
        raw_signed,
        sign_branch,
        status: found.status,
        measures,
        bound: found.bound,
        nodes: found.nodes,
        warm_start_value: found.warm_start_value,
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}

pub fn audit_conjunction_bnb(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    time_limit: Option<f64>,
) -> Result<AuditResult, AuditError> {
    audit_conjunction_bnb_with(ds, yhat, obj, time_limit, Exec::default())
}

pub fn audit_conjunction_milp(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    time_limit: Option<f64>,
) -> Result<AuditResult, AuditError> {
    audit_conjunction_milp_with(ds, yhat, obj, time_limit, &Solver::Builtin)
}

pub fn audit_linear_milp(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    warm: Option<&crate::subgroups::LinearThresholdGroup>,
    time_limit: Option<f64>,
) -> Result<AuditResult, AuditError> {
    audit_linear_milp_with(ds, yhat, obj, warm, time_limit, &Solver::Builtin)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgroupClass {
    Conjunction,
    Linear,
}

impl std::str::FromStr for SubgroupClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conj" | "conjunction" => Ok(SubgroupClass::Conjunction),
            "linear" => Ok(SubgroupClass::Linear),
            _ => Err(format!("unknown subgroup class `{s}` (expected conj or linear)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaStatus {
    Satisfied,
    Violated,
    /// The search ended without proving either outcome.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct GammaCheck {
    pub status: GammaStatus,
    pub witness: Option<Subgroup>,
    /// Value of the witness under the measure `gamma` refers to.
    pub witness_value: Option<f64>,
    /// Threshold actually used by the search (converted when run through SD).
    pub search_threshold: f64,
}

impl GammaCheck {
    pub fn satisfied(&self) -> bool {
        self.status == GammaStatus::Satisfied
    }

    pub fn to_json(&self, groups: &[AttributeGroup]) -> Value {
        json!({
            "satisfied": self.satisfied(),
            "status": match self.status {
                GammaStatus::Satisfied => "satisfied",
                GammaStatus::Violated => "violated",
                GammaStatus::Unknown => "unknown",
            },
            "witness": self.witness.as_ref().map(|s| s.to_json(groups)),
            "witness_description": self.witness.as_ref().map(|s| crate::subgroups::describe(s, groups)),
            "witness_value": self.witness_value,
            "search_threshold": self.search_threshold,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Search with SD on the conditional distributions and a converted threshold.
    pub via_sd: bool,
    pub solver: Solver,
    pub exec: Exec,
}

/// Is every subgroup's `kind` value at most `gamma`? The search looks for any
/// subgroup strictly above `gamma` and stops at the first one.
pub fn check_gamma(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    kind: Measure,
    gamma: f64,
    class: SubgroupClass,
    time_limit: Option<f64>,
) -> Result<GammaCheck, AuditError> {
    check_gamma_with(ds, yhat, kind, gamma, class, time_limit, &CheckOptions::default())
}

pub fn check_gamma_with(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    kind: Measure,
    gamma: f64,
    class: SubgroupClass,
    time_limit: Option<f64>,
    opts: &CheckOptions,
) -> Result<GammaCheck, AuditError> {
    let satisfied = |t: f64| GammaCheck { status: GammaStatus::Satisfied, witness: None, witness_value: None, search_threshold: t };
    let target = SignedWeights::for_measure(kind, ds, yhat)?;
    // Constant classifiers (on the relevant rows) make SPSF/FPSF identically 0.
    if kind != Measure::SD && (target.denominators.p_h <= 0.0 || target.denominators.p_h >= 1.0) {
        return Ok(satisfied(gamma));
    }
    let limit_units = target.threshold_units(gamma);
    if target.max_units() <= limit_units {
        return Ok(satisfied(gamma));
    }

    let (search_ds, search_yhat, search_kind, search_gamma) = match (opts.via_sd, kind) {
        (true, Measure::SPSF) => {
            let d = target.denominators;
            (ds.clone(), yhat.clone(), Measure::SD, metrics::gamma_bound_for_msd(gamma, d.p_h, None)?)
        }
        (true, Measure::FPSF) => {
            let d = target.denominators;
            let idx = ds.rows_with_label(false);
            let sub = ds.subset(&idx)?;
            let sub_yhat = yhat.restrict(&sub, &idx)?;
            (sub, sub_yhat, Measure::SD, metrics::gamma_bound_for_msd(gamma, d.p_h, Some(d.p_y0))?)
        }
        _ => (ds.clone(), yhat.clone(), kind, gamma),
    };
    let obj = AuditObjective::new(&search_ds, &search_yhat, search_kind)?;
    // Strictly above the threshold: one half unit past the largest fair sum. The
    // SD sums through the proxy are the target's sums negated, so its integer
    // threshold carries over unchanged.
    let units = if search_kind == kind { obj.weights.threshold_units(search_gamma) } else { limit_units };
    let floor = (units as f64 + 0.5) / obj.weights.scale as f64;
    let obj = obj.with_gamma_floor(floor, true);
    let result = match class {
        SubgroupClass::Conjunction => audit_conjunction_bnb_with(&search_ds, &search_yhat, &obj, time_limit, opts.exec)?,
        SubgroupClass::Linear => {
            let parts = (search_yhat.positive_rows(), search_yhat.negative_rows());
            let warm = logistic_warm_start(&search_ds, &parts.0, &parts.1).ok();
            audit_linear_milp_with(&search_ds, &search_yhat, &obj, warm.as_ref(), time_limit, &opts.solver)?
        }
    };
    let status = match (&result.subgroup, result.status) {
        (Some(_), _) => GammaStatus::Violated,
        (None, SolveStatus::Infeasible) => GammaStatus::Satisfied,
        (None, _) => GammaStatus::Unknown,
    };
    let witness_value = result.subgroup.as_ref().map(|s| {
        let members = membership(s, ds).expect("same protected columns");
        target.to_real(target.sum(&members).abs())
    });
    Ok(GammaCheck { status, witness: result.subgroup, witness_value, search_threshold: search_gamma })
}
