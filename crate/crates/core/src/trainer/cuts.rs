//! Fairness cuts over a master's prediction variables.

use serde_json::{json, Value};

use super::{Master, TrainError};
use crate::dataset::{AttributeGroup, AuditDataset};
use crate::metrics::{snap_units, Measure, PredictionVector, SignedWeights};
use crate::milp::{LinExpr, Sense, VarId};
use crate::subgroups::{describe, membership, Subgroup};

/// One directional constraint `±(measure before absolute value) ≤ γ` on a fixed
/// set of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FairnessCut {
    pub kind: Measure,
    /// Rows of the subgroup, ascending.
    pub members: Vec<usize>,
    /// Sign of the signed measure when the cut was made, `+1` or `−1`.
    pub direction: i8,
    pub gamma: f64,
    pub subgroup: Option<Subgroup>,
    /// Measure value of the incumbent that triggered the cut.
    pub violation: f64,
    pub iteration: usize,
}

impl FairnessCut {
    /// Cut on subgroup `s` in the direction `yhat` violates it.
    pub fn from_subgroup(
        ds: &AuditDataset,
        yhat: &PredictionVector,
        kind: Measure,
        s: Subgroup,
        gamma: f64,
        iteration: usize,
    ) -> Result<Self, TrainError> {
        let member_mask = membership(&s, ds).map_err(|e| TrainError::ModelMismatch(e.to_string()))?;
        let sw = SignedWeights::for_measure(kind, ds, yhat)?;
        let units = sw.sum(&member_mask);
        Ok(Self {
            kind,
            members: (0..ds.len()).filter(|&i| member_mask[i]).collect(),
            direction: if units < 0 { -1 } else { 1 },
            gamma,
            violation: sw.to_real(units.abs()),
            subgroup: Some(s),
            iteration,
        })
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.members {
            m[i] = true;
        }
        m
    }

    /// Directed signed measure under `yhat`, the quantity the cut bounds by `γ`.
    pub fn lhs(&self, ds: &AuditDataset, yhat: &PredictionVector) -> Result<f64, TrainError> {
        let sw = SignedWeights::for_measure(self.kind, ds, yhat)?;
        Ok(f64::from(self.direction) * sw.to_real(sw.sum(&self.mask(ds.len()))))
    }

    /// Exact test of `lhs > γ`. An SD cut is never violated by a constant `yhat`.
    pub fn is_violated_by(&self, ds: &AuditDataset, yhat: &PredictionVector) -> Result<bool, TrainError> {
        let sw = match SignedWeights::for_measure(self.kind, ds, yhat) {
            Ok(sw) => sw,
            Err(crate::metrics::MetricsError::EmptyConditional) => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        let units = i128::from(self.direction) * sw.sum(&self.mask(ds.len()));
        Ok(units > sw.threshold_units(self.gamma))
    }

    pub fn to_json(&self, groups: &[AttributeGroup]) -> Value {
        json!({
            "iteration": self.iteration,
            "kind": self.kind.name(),
            "direction": self.direction,
            "gamma": self.gamma,
            "violation": self.violation,
            "size": self.members.len(),
            "subgroup": self.subgroup.as_ref().map(|s| s.to_json(groups)),
            "description": self.subgroup.as_ref().map(|s| describe(s, groups)),
        })
    }
}

/// Variables `q⁺_g = w_g·ŷ_g / W⁺` and `q⁻_g = w_g·(1 − ŷ_g) / W⁻` per master
/// group, pinned by the reference values `p⁺ = 1/W⁺`, `p⁻ = 1/W⁻`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdCutAux {
    pub p_plus: Vec<VarId>,
    pub p_minus: Vec<VarId>,
    pub p_ref_plus: VarId,
    pub p_ref_minus: VarId,
}

impl SdCutAux {
    fn install(master: &mut Master) -> SdCutAux {
        let model = &mut master.model;
        let p_ref_plus = model.add_continuous("p_ref_plus", 0.0, 1.0);
        let p_ref_minus = model.add_continuous("p_ref_minus", 0.0, 1.0);
        let mut sum_plus = LinExpr::new();
        let mut sum_minus = LinExpr::new();
        let mut p_plus = Vec::with_capacity(master.groups.len());
        let mut p_minus = Vec::with_capacity(master.groups.len());
        for (g, group) in master.groups.iter().enumerate() {
            let w = group.weight as f64;
            let y = &group.yhat;
            let plus = model.add_continuous(format!("p_plus_{g}"), 0.0, 1.0);
            let minus = model.add_continuous(format!("p_minus_{g}"), 0.0, 1.0);

            let mut r = LinExpr::var(plus);
            r.add_scaled(y, -w);
            model.add_constraint(format!("sd_plus_on_{g}"), &r, Sense::Le, 0.0);
            let mut r = LinExpr::var(plus);
            r.add_term(p_ref_plus, -w);
            model.add_constraint(format!("sd_plus_ref_{g}"), &r, Sense::Le, 0.0);
            let mut r = LinExpr::var(plus);
            r.add_term(p_ref_plus, -w).add_scaled(y, -w);
            model.add_constraint(format!("sd_plus_eq_{g}"), &r, Sense::Ge, -w);

            let mut r = LinExpr::var(minus);
            r.add_scaled(y, w);
            model.add_constraint(format!("sd_minus_on_{g}"), &r, Sense::Le, w);
            let mut r = LinExpr::var(minus);
            r.add_term(p_ref_minus, -w);
            model.add_constraint(format!("sd_minus_ref_{g}"), &r, Sense::Le, 0.0);
            let mut r = LinExpr::var(minus);
            r.add_term(p_ref_minus, -w).add_scaled(y, w);
            model.add_constraint(format!("sd_minus_eq_{g}"), &r, Sense::Ge, 0.0);

            sum_plus.add_term(plus, 1.0);
            sum_minus.add_term(minus, 1.0);
            p_plus.push(plus);
            p_minus.push(minus);
        }
        model.add_constraint("sd_plus_total", &sum_plus, Sense::Eq, 1.0);
        model.add_constraint("sd_minus_total", &sum_minus, Sense::Eq, 1.0);
        SdCutAux { p_plus, p_minus, p_ref_plus, p_ref_minus }
    }
}

/// Adds `cut` to the master and returns the new row's index. SPSF and FPSF
/// rows are scaled to integer-valued left-hand sides at integral `ŷ`, with
/// the right-hand side half a unit above the largest sum that is within `γ`.
pub fn render_cut(cut: &FairnessCut, ds: &AuditDataset, master: &mut Master) -> Result<usize, TrainError> {
    if cut.direction != 1 && cut.direction != -1 {
        return Err(TrainError::InvalidConfig(format!("cut direction {} is not ±1", cut.direction)));
    }
    let in_s = cut.mask(ds.len());
    let w = ds.weights();
    let labels = ds.labels();
    let sign = f64::from(cut.direction);
    let mut row_coef = vec![0.0; ds.len()];
    let (lhs, rhs) = match cut.kind {
        Measure::SPSF | Measure::FPSF => {
            let relevant = |i: usize| cut.kind == Measure::SPSF || !labels[i];
            let base: u64 = (0..ds.len()).filter(|&i| relevant(i)).map(|i| w[i]).sum();
            let in_base: u64 = (0..ds.len()).filter(|&i| relevant(i) && in_s[i]).map(|i| w[i]).sum();
            if in_base == 0 {
                return Err(TrainError::VacuousCut);
            }
            let total = ds.total_weight() as f64;
            let share = in_base as f64 / base as f64;
            for i in (0..ds.len()).filter(|&i| relevant(i)) {
                row_coef[i] = w[i] as f64 * share - if in_s[i] { w[i] as f64 } else { 0.0 };
            }
            let limit = snap_units(cut.gamma * total * base as f64) as f64;
            let mut lhs = LinExpr::new();
            for g in &master.groups {
                let coef: f64 = g.rows.iter().map(|&i| row_coef[i]).sum();
                lhs.add_scaled(&g.yhat, sign * coef);
            }
            (lhs, (limit + 0.5) / base as f64)
        }
        Measure::SD => {
            if cut.members.is_empty() {
                return Err(TrainError::VacuousCut);
            }
            if master.sd_aux.is_none() {
                master.sd_aux = Some(SdCutAux::install(master));
            }
            let aux = master.sd_aux.as_ref().expect("installed above");
            let mut lhs = LinExpr::new();
            for (g, group) in master.groups.iter().enumerate() {
                let inside: u64 = group.rows.iter().filter(|&&i| in_s[i]).map(|&i| w[i]).sum();
                if inside > 0 {
                    let share = inside as f64 / group.weight as f64;
                    lhs.add_term(aux.p_plus[g], sign * share).add_term(aux.p_minus[g], -sign * share);
                }
            }
            (lhs, cut.gamma)
        }
    };
    let tag = format!("cut_{}", master.cut_rows.len());
    let row = master.model.add_constraint(tag, &lhs, Sense::Le, rhs);
    master.cut_rows.push(row);
    Ok(row)
}
