//! Accuracy and worst-case fairness of a fixed classifier.

use serde_json::{json, Value};

use super::{ModelSpec, TrainError};
use crate::auditor::{audit_conjunction_bnb_with, AuditObjective};
use crate::dataset::{AttributeGroup, AuditDataset};
use crate::exec::Exec;
use crate::metrics::{Measure, PredictionVector};
use crate::subgroups::{describe, Subgroup};

#[derive(Clone, Debug, PartialEq)]
pub struct WorstViolation {
    pub value: f64,
    pub subgroup: Option<Subgroup>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Mean of the per-class error rates, over the classes present.
    pub balanced_error: f64,
    pub accuracy: f64,
    /// 0 when precision and recall are both undefined or zero.
    pub f1: f64,
    pub positive_rate: f64,
    pub sd: Option<WorstViolation>,
    pub spsf: Option<WorstViolation>,
    pub fpsf: Option<WorstViolation>,
}

impl Evaluation {
    pub fn worst(&self, kind: Measure) -> Option<f64> {
        match kind {
            Measure::SD => &self.sd,
            Measure::SPSF => &self.spsf,
            Measure::FPSF => &self.fpsf,
        }
        .as_ref()
        .map(|w| w.value)
    }

    pub fn to_json(&self, groups: &[AttributeGroup]) -> Value {
        let worst = |w: &Option<WorstViolation>| {
            w.as_ref().map(|w| {
                json!({
                    "value": w.value,
                    "subgroup": w.subgroup.as_ref().map(|s| s.to_json(groups)),
                    "description": w.subgroup.as_ref().map(|s| describe(s, groups)),
                })
            })
        };
        json!({
            "balanced_error": self.balanced_error,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "positive_rate": self.positive_rate,
            "worst_violation": {
                "sd": worst(&self.sd),
                "spsf": worst(&self.spsf),
                "fpsf": worst(&self.fpsf),
            },
        })
    }
}

pub fn evaluate(model: &ModelSpec, ds: &AuditDataset) -> Result<Evaluation, TrainError> {
    let yhat = model.predict(ds)?;
    evaluate_predictions(ds, &yhat, Exec::default())
}

/// Weighted classification metrics plus the worst conjunction subgroup for
/// each measure, found by exact branch-and-bound.
pub fn evaluate_predictions(ds: &AuditDataset, yhat: &[bool], exec: Exec) -> Result<Evaluation, TrainError> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for ((&y, &h), &w) in ds.labels().iter().zip(yhat).zip(ds.weights()) {
        match (y, h) {
            (true, true) => tp += w,
            (false, true) => fp += w,
            (false, false) => tn += w,
            (true, false) => fn_ += w,
        }
    }
    let total = (tp + fp + tn + fn_) as f64;
    let mut rates = Vec::new();
    if tn + fp > 0 {
        rates.push(fp as f64 / (tn + fp) as f64);
    }
    if tp + fn_ > 0 {
        rates.push(fn_ as f64 / (tp + fn_) as f64);
    }
    let balanced_error = if rates.is_empty() { 0.0 } else { rates.iter().sum::<f64>() / rates.len() as f64 };
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };

    let prediction = PredictionVector::new(ds, yhat.to_vec())?;
    let worst = |kind: Measure| -> Result<Option<WorstViolation>, TrainError> {
        if ds.groups().is_empty() || (kind == Measure::FPSF && ds.class_counts().0 == 0) {
            return Ok(None);
        }
        let obj = match AuditObjective::new(ds, &prediction, kind) {
            Ok(obj) => obj,
            // Constant predictions (on the relevant rows) have no unfair subgroup.
            Err(e) if e.is_empty_conditional() => return Ok(Some(WorstViolation { value: 0.0, subgroup: None })),
            Err(e) => return Err(e.into()),
        };
        let r = audit_conjunction_bnb_with(ds, &prediction, &obj, None, exec)?;
        Ok(Some(WorstViolation { value: r.objective_value, subgroup: r.subgroup }))
    };
    Ok(Evaluation {
        balanced_error,
        accuracy: (tp + tn) as f64 / total,
        f1,
        positive_rate: (tp + fp) as f64 / total,
        sd: worst(Measure::SD)?,
        spsf: worst(Measure::SPSF)?,
        fpsf: worst(Measure::FPSF)?,
    })
}
