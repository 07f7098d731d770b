//! DNF master written as a CNF over negated inputs.
//!
//! `u[k][j] = 1` puts feature `j` in clause `k`. Rows are grouped by feature
//! vector and label; `e` is a group's 0-1 error. For a negative row, any clause
//! whose selected features are all 1 forces an error. For a positive row,
//! `v[k] = 1` marks clause `k` as violated and the row errs when all are.

use super::{class_masses, feature_key, group_rows, Master, MasterGroup, MasterVars, TrainConfig, TrainError};
use crate::dataset::AuditDataset;
use crate::milp::{LinExpr, MilpModel, ObjectiveSense, Sense};

pub fn build_master_dnf(ds: &AuditDataset, cfg: &TrainConfig) -> Result<Master, TrainError> {
    build(ds, cfg, false)
}

/// With `exact`, errors are also bounded above so that `e` equals the DNF's
/// error whatever the objective prefers; cuts need this, since they can make a
/// larger `e` attractive.
pub(crate) fn build(ds: &AuditDataset, cfg: &TrainConfig, exact: bool) -> Result<Master, TrainError> {
    let (n0, n1) = class_masses(ds)?;
    let d = ds.feature_names().len();
    let features = ds.features();
    for j in 0..d {
        if features.iter().any(|x| x[j] != 0.0 && x[j] != 1.0) {
            return Err(TrainError::NonBinaryFeatures(ds.feature_names()[j].clone()));
        }
    }
    let labels = ds.labels();
    let (rows, row_group) = group_rows(ds.len(), |i| (feature_key(&features[i]), labels[i]));
    let big_c = cfg.clauses;

    let mut model = MilpModel::new(ObjectiveSense::Minimize);
    let u: Vec<Vec<_>> = (0..big_c)
        .map(|k| (0..d).map(|j| model.add_binary(format!("u_{j}_{k}"))).collect())
        .collect();
    // Clauses are interchangeable; keep them sorted by size.
    for k in 1..big_c {
        let mut row = LinExpr::new();
        for j in 0..d {
            row.add_term(u[k - 1][j], 1.0);
            row.add_term(u[k][j], -1.0);
        }
        model.add_constraint(format!("order_{k}"), &row, Sense::Le, 0.0);
    }
    let mut objective = LinExpr::new();
    let mut groups = Vec::with_capacity(rows.len());
    for (g, members) in rows.into_iter().enumerate() {
        let x = &features[members[0]];
        let positive = labels[members[0]];
        // Features that are 0 here: selecting any of them breaks the clause.
        let zeros: Vec<usize> = (0..d).filter(|&j| x[j] == 0.0).collect();
        let e = model.add_continuous(format!("e_{g}"), 0.0, 1.0);
        let weight: u64 = members.iter().map(|&i| ds.weights()[i]).sum();
        objective.add_term(e, weight as f64 / if positive { n1 } else { n0 });

        if positive {
            let mut all_violated = LinExpr::var(e);
            let mut v_vars = Vec::with_capacity(big_c);
            for (k, uk) in u.iter().enumerate() {
                let v = model.add_continuous(format!("v_{g}_{k}"), 0.0, 1.0);
                for &j in &zeros {
                    let mut row = LinExpr::var(v);
                    row.add_term(uk[j], -1.0);
                    model.add_constraint(format!("viol_{g}_{k}_{j}"), &row, Sense::Ge, 0.0);
                }
                all_violated.add_term(v, -1.0);
                v_vars.push(v);
            }
            model.add_constraint(format!("pos_err_{g}"), &all_violated, Sense::Ge, -(big_c as f64 - 1.0));
            if exact {
                for (k, uk) in u.iter().enumerate() {
                    let mut row = LinExpr::var(v_vars[k]);
                    for &j in &zeros {
                        row.add_term(uk[j], -1.0);
                    }
                    model.add_constraint(format!("viol_ub_{g}_{k}"), &row, Sense::Le, 0.0);
                    let mut err = LinExpr::var(e);
                    err.add_term(v_vars[k], -1.0);
                    model.add_constraint(format!("pos_err_ub_{g}_{k}"), &err, Sense::Le, 0.0);
                }
            }
            let mut yhat = LinExpr::constant(1.0);
            yhat.add_term(e, -1.0);
            groups.push(MasterGroup { yhat, rows: members, weight });
        } else {
            let mut any_true = LinExpr::new();
            any_true.add_term(e, -1.0);
            for (k, uk) in u.iter().enumerate() {
                let mut row = LinExpr::var(e);
                for &j in &zeros {
                    row.add_term(uk[j], 1.0);
                }
                model.add_constraint(format!("neg_err_{g}_{k}"), &row, Sense::Ge, 1.0);
                if exact {
                    let a = model.add_continuous(format!("a_{g}_{k}"), 0.0, 1.0);
                    for &j in &zeros {
                        let mut r = LinExpr::var(a);
                        r.add_term(uk[j], 1.0);
                        model.add_constraint(format!("sat_ub_{g}_{k}_{j}"), &r, Sense::Le, 1.0);
                    }
                    any_true.add_term(a, 1.0);
                }
            }
            if exact {
                model.add_constraint(format!("neg_err_ub_{g}"), &any_true, Sense::Ge, 0.0);
            }
            groups.push(MasterGroup { yhat: LinExpr::var(e), rows: members, weight });
        }
    }
    model.set_objective(ObjectiveSense::Minimize, &objective);
    model.time_limit = cfg.master_time_limit;

    Ok(Master {
        model,
        vars: MasterVars::Dnf { u },
        groups,
        row_group,
        feature_names: ds.feature_names().to_vec(),
        sd_aux: None,
        cut_rows: Vec::new(),
    })
}
