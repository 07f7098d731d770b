//! The solve, audit, cut loop.

use std::fmt::Write as _;
use std::time::Instant;

use serde_json::{json, Value};

use super::cuts::{render_cut, FairnessCut};
use super::eval::Evaluation;
use super::{build_master_linear, class_masses, dnf, ModelKind, ModelSpec, OracleKind, TrainConfig, TrainError};
use crate::auditor::{
    audit_conjunction_bnb_with, audit_linear_milp_with, logistic_warm_start, status_name, AuditObjective,
    SubgroupClass,
};
use crate::dataset::{AttributeGroup, AuditDataset};
use crate::metrics::{Measure, MetricsError, PredictionVector, SignedWeights};
use crate::milp::SolveStatus;
use crate::subgroups::{membership, Subgroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainStatus {
    /// The auditor proved the final model γ-fair on the training data.
    FairOptimal,
    /// An audit ran out of time without a violator or a proof.
    FairUnproven,
    /// A violation remained after `max_cuts` cuts.
    MaxCuts,
    /// The overall time limit ended the loop.
    TimeLimit,
}

impl TrainStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrainStatus::FairOptimal => "FairOptimal",
            TrainStatus::FairUnproven => "FairUnproven",
            TrainStatus::MaxCuts => "MaxCuts",
            TrainStatus::TimeLimit => "TimeLimit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub master_objective: f64,
    pub master_status: SolveStatus,
    pub balanced_error: f64,
    pub accuracy: f64,
    /// Value of the violator found in this iteration, if any.
    pub violation: Option<f64>,
    pub oracle_status: SolveStatus,
    /// Cuts in the master after this iteration.
    pub cuts: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainTimings {
    pub total_s: f64,
    pub master_s: f64,
    pub oracle_s: f64,
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub model: ModelSpec,
    pub status: TrainStatus,
    pub cuts: Vec<FairnessCut>,
    pub iterations: Vec<IterationRecord>,
    /// Master objective of the final model (error-rate sum plus sparsity term).
    pub master_objective: f64,
    /// Whether the final master solve was proven optimal.
    pub master_optimal: bool,
    pub balanced_error: f64,
    pub predictions: Vec<bool>,
    pub timings: TrainTimings,
}

impl TrainResult {
    pub fn to_json(
        &self,
        groups: &[AttributeGroup],
        train: Option<&Evaluation>,
        test: Option<&Evaluation>,
        timings: bool,
    ) -> Value {
        let iterations: Vec<Value> = self
            .iterations
            .iter()
            .map(|r| {
                json!({
                    "iteration": r.iteration,
                    "master_objective": r.master_objective,
                    "master_status": status_name(r.master_status),
                    "balanced_error": r.balanced_error,
                    "accuracy": r.accuracy,
                    "violation": r.violation,
                    "oracle_status": status_name(r.oracle_status),
                    "cuts": r.cuts,
                })
            })
            .collect();
        json!({
            "model": self.model.to_json(),
            "status": self.status.name(),
            "master_optimal": self.master_optimal,
            "balanced_error": self.balanced_error,
            "cuts": self.cuts.iter().map(|c| c.to_json(groups)).collect::<Vec<_>>(),
            "iterations": iterations,
            "metrics": {
                "train": train.map(|e| e.to_json(groups)),
                "test": test.map(|e| e.to_json(groups)),
            },
            "timings": timings.then(|| json!({
                "total_s": self.timings.total_s,
                "master_s": self.timings.master_s,
                "oracle_s": self.timings.oracle_s,
            })),
        })
    }

    /// `iteration,accuracy,violation,cuts`; a fair iteration reports
    /// `final_violation` when given, else an empty field.
    pub fn plot_csv(&self, final_violation: Option<f64>) -> String {
        let mut out = String::from("iteration,accuracy,violation,cuts\n");
        for r in &self.iterations {
            let v = r.violation.or(final_violation).map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", r.iteration, r.accuracy, v, r.cuts).expect("writing to a string");
        }
        out
    }
}

enum Verdict {
    Fair,
    Violator(Subgroup, f64),
    Unproven,
}

/// Looks for a subgroup whose `cut_kind` value exceeds γ under `yhat`.
fn find_violator(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    cfg: &TrainConfig,
    time_limit: Option<f64>,
) -> Result<(Verdict, SolveStatus), TrainError> {
    let target = match SignedWeights::for_measure(cfg.cut_kind, ds, yhat) {
        Ok(t) => t,
        Err(MetricsError::EmptyConditional) => return Ok((Verdict::Fair, SolveStatus::Optimal)),
        Err(e) => return Err(e.into()),
    };
    // Predictions constant on the relevant rows are fair for every subgroup.
    if cfg.cut_kind != Measure::SD && (target.denominators.p_h <= 0.0 || target.denominators.p_h >= 1.0) {
        return Ok((Verdict::Fair, SolveStatus::Optimal));
    }
    let limit = target.threshold_units(cfg.gamma);
    if target.max_units() <= limit {
        return Ok((Verdict::Fair, SolveStatus::Optimal));
    }

    let stratum;
    let (search_ds, search_yhat, search_kind) = match (cfg.oracle_kind, cfg.cut_kind) {
        (OracleKind::SdProxy, Measure::FPSF) => {
            let idx = ds.rows_with_label(false);
            let sub = ds.subset(&idx)?;
            let sub_yhat = yhat.restrict(&sub, &idx)?;
            stratum = (sub, sub_yhat);
            (&stratum.0, &stratum.1, Measure::SD)
        }
        (OracleKind::SdProxy, _) => (ds, yhat, Measure::SD),
        (OracleKind::SameAsCut, kind) => (ds, yhat, kind),
    };
    let obj = AuditObjective::new(search_ds, search_yhat, search_kind)?;
    // SPSF and FPSF sums equal the proxy's SD sums negated, so the integer
    // threshold is shared.
    let floor = (limit as f64 + 0.5) / obj.weights.scale as f64;
    let obj = obj.with_gamma_floor(floor, false);
    let result = match cfg.subgroup_class {
        SubgroupClass::Conjunction => audit_conjunction_bnb_with(search_ds, search_yhat, &obj, time_limit, cfg.exec)?,
        SubgroupClass::Linear => {
            let warm =
                logistic_warm_start(search_ds, &search_yhat.positive_rows(), &search_yhat.negative_rows()).ok();
            audit_linear_milp_with(search_ds, search_yhat, &obj, warm.as_ref(), time_limit, &cfg.solver)?
        }
    };
    let verdict = match (result.subgroup, result.status) {
        (Some(s), _) => {
            let members = membership(&s, ds).map_err(|e| TrainError::ModelMismatch(e.to_string()))?;
            let units = target.sum(&members).abs();
            if units > limit {
                Verdict::Violator(s, target.to_real(units))
            } else {
                Verdict::Unproven
            }
        }
        (None, SolveStatus::Infeasible) => Verdict::Fair,
        (None, _) => Verdict::Unproven,
    };
    Ok((verdict, result.status))
}

fn accuracy_and_balanced_error(ds: &AuditDataset, yhat: &[bool]) -> (f64, f64) {
    let (n0, n1) = ds.class_counts();
    let (mut correct, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for ((&y, &h), &w) in ds.labels().iter().zip(yhat).zip(ds.weights()) {
        match (y, h) {
            (false, true) => fp += w,
            (true, false) => fn_ += w,
            _ => correct += w,
        }
    }
    let accuracy = correct as f64 / ds.total_weight() as f64;
    (accuracy, (fp as f64 / n0 as f64 + fn_ as f64 / n1 as f64) / 2.0)
}

/// Trains under γ-fairness: solve the master, audit its predictions, cut the
/// worst violator off in its direction, and repeat.
pub fn train(ds: &AuditDataset, cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    class_masses(ds)?;
    let start = Instant::now();
    let mut master = match cfg.model {
        ModelKind::Linear => build_master_linear(ds, cfg)?,
        ModelKind::Dnf => dnf::build(ds, cfg, true)?,
    };
    let remaining = || cfg.time_limit.map(|l| (l - start.elapsed().as_secs_f64()).max(0.0));
    let min_limit = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };

    let mut timings = TrainTimings::default();
    let mut cuts: Vec<FairnessCut> = Vec::new();
    let mut iterations = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut last: Option<(ModelSpec, Vec<bool>, f64, bool)> = None;
    let status = loop {
        let iteration = iterations.len();
        master.model.time_limit = min_limit(cfg.master_time_limit, remaining());
        if let Some(v) = &previous {
            master.model.warm_start = Some(master.warm_start_for(v));
        }
        let t0 = Instant::now();
        let sol = cfg.solver.solve(&master.model)?;
        timings.master_s += t0.elapsed().as_secs_f64();
        if !sol.has_incumbent() {
            if last.is_some() {
                break TrainStatus::TimeLimit;
            }
            return Err(TrainError::NoIncumbent);
        }
        let spec = master.extract(&sol.values);
        let predictions = spec.predict(ds)?;
        let objective = sol.objective_value.unwrap_or(f64::NAN);
        let (accuracy, balanced_error) = accuracy_and_balanced_error(ds, &predictions);
        let yhat = PredictionVector::new(ds, predictions.clone())?;
        previous = Some(sol.values);
        last = Some((spec, predictions, objective, sol.status == SolveStatus::Optimal));

        let t1 = Instant::now();
        let oracle_limit = min_limit(cfg.oracle_time_limit, remaining());
        let (verdict, oracle_status) = find_violator(ds, &yhat, cfg, oracle_limit)?;
        timings.oracle_s += t1.elapsed().as_secs_f64();

        let mut record = IterationRecord {
            iteration,
            master_objective: objective,
            master_status: sol.status,
            balanced_error,
            accuracy,
            violation: None,
            oracle_status,
            cuts: cuts.len(),
        };
        let outcome = match verdict {
            Verdict::Fair => Some(TrainStatus::FairOptimal),
            Verdict::Unproven => Some(TrainStatus::FairUnproven),
            Verdict::Violator(s, value) => {
                record.violation = Some(value);
                if cuts.len() >= cfg.max_cuts {
                    Some(TrainStatus::MaxCuts)
                } else {
                    let cut = FairnessCut::from_subgroup(ds, &yhat, cfg.cut_kind, s, cfg.gamma, iteration)?;
                    render_cut(&cut, ds, &mut master)?;
                    cuts.push(cut);
                    record.cuts = cuts.len();
                    remaining().is_some_and(|r| r <= 0.0).then_some(TrainStatus::TimeLimit)
                }
            }
        };
        iterations.push(record);
        if let Some(s) = outcome {
            break s;
        }
    };

    let (model, predictions, master_objective, master_optimal) = last.expect("at least one master solution");
    let (_, balanced_error) = accuracy_and_balanced_error(ds, &predictions);
    timings.total_s = start.elapsed().as_secs_f64();
    Ok(TrainResult {
        model,
        status,
        cuts,
        iterations,
        master_objective,
        master_optimal,
        balanced_error,
        predictions,
        timings,
    })
}
