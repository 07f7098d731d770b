//! Mixed-binary audit formulations over distinct protected vectors.

use std::time::Instant;

use super::{finish, AuditError, AuditObjective, AuditResult, Found, LINEAR_EPS};
use crate::dataset::AuditDataset;
use crate::metrics::{collapse, PredictionVector, ProtectedCell};
use crate::milp::{LinExpr, MilpModel, ObjectiveSense, Sense, Solver, VarId};
use crate::subgroups::{Conjunction, LinearThresholdGroup, Subgroup};

/// An audit model with handles to its variables.
pub struct AuditModel {
    pub model: MilpModel,
    pub cells: Vec<ProtectedCell>,
    /// Membership indicator per cell.
    pub y: Vec<VarId>,
    /// Literal selectors (conjunction) or coefficients (linear), one per one-hot column.
    pub columns: Vec<VarId>,
    /// Threshold of a linear group.
    pub t: Option<VarId>,
    pub o: VarId,
    pub b: VarId,
}

/// `o ≤ ±D + M·(b or 1−b)`, optional floor, optional minimum size, objective.
fn objective_block(model: &mut MilpModel, obj: &AuditObjective, cells: &[ProtectedCell], y: &[VarId]) -> (VarId, VarId) {
    let o = model.add_continuous("o", 0.0, f64::INFINITY);
    let b = model.add_binary("b");
    let mut diff = LinExpr::new();
    for (cell, &yv) in cells.iter().zip(y) {
        diff.add_term(yv, obj.weights.to_real(cell.coef));
    }
    let m = obj.big_m;
    // b = 0 selects the nonnegative side of the absolute value.
    let mut pos = LinExpr::var(o);
    pos.add_scaled(&diff, -1.0).add_term(b, -m);
    model.add_constraint("abs_pos", &pos, Sense::Le, 0.0);
    let mut neg = LinExpr::var(o);
    neg.add_scaled(&diff, 1.0).add_term(b, m);
    model.add_constraint("abs_neg", &neg, Sense::Le, m);
    if let Some(g) = obj.gamma_floor {
        model.add_constraint("floor", &LinExpr::var(o), Sense::Ge, g);
    }
    if obj.n_min > 0 {
        let mut size = LinExpr::new();
        for (cell, &yv) in cells.iter().zip(y) {
            size.add_term(yv, cell.weight as f64);
        }
        model.add_constraint("min_size", &size, Sense::Ge, obj.n_min as f64);
    }
    if obj.feasibility_only {
        model.set_objective(ObjectiveSense::Maximize, &LinExpr::new());
    } else {
        model.set_objective(ObjectiveSense::Maximize, &LinExpr::var(o));
    }
    (o, b)
}

/// Binary literal selectors `u_j`, continuous memberships `y_g ∈ [0,1]`.
pub fn conjunction_model(ds: &AuditDataset, obj: &AuditObjective) -> AuditModel {
    let cells = collapse(ds, &obj.weights);
    let width = ds.width();
    let mut model = MilpModel::new(ObjectiveSense::Maximize);
    let u: Vec<VarId> = (0..width).map(|j| model.add_binary(format!("u_{j}"))).collect();
    let y: Vec<VarId> = (0..cells.len()).map(|g| model.add_continuous(format!("y_{g}"), 0.0, 1.0)).collect();
    for (g, cell) in cells.iter().enumerate() {
        let mut cover = LinExpr::var(y[g]);
        for j in 0..width {
            if cell.bits[j] == 0 {
                // A selected literal absent from the cell excludes it.
                let mut row = LinExpr::var(y[g]);
                row.add_term(u[j], 1.0);
                model.add_constraint(format!("excl_{g}_{j}"), &row, Sense::Le, 1.0);
                cover.add_term(u[j], 1.0);
            }
        }
        model.add_constraint(format!("incl_{g}"), &cover, Sense::Ge, 1.0);
    }
    for (a, grp) in ds.groups().iter().enumerate() {
        let mut row = LinExpr::new();
        for j in grp.range() {
            row.add_term(u[j], 1.0);
        }
        model.add_constraint(format!("one_value_{a}"), &row, Sense::Le, 1.0);
    }
    let mut any = LinExpr::new();
    for &uj in &u {
        any.add_term(uj, 1.0);
    }
    model.add_constraint("nonempty", &any, Sense::Ge, 1.0);
    let (o, b) = objective_block(&mut model, obj, &cells, &y);
    AuditModel { model, cells, y, columns: u, t: None, o, b }
}

/// Coefficients `c ∈ [−1,1]^m`, threshold `t ∈ [−m,m]`, binary memberships.
pub fn linear_model(ds: &AuditDataset, obj: &AuditObjective, eps: f64) -> AuditModel {
    let cells = collapse(ds, &obj.weights);
    let width = ds.width();
    let big = 2.0 * width as f64;
    let mut model = MilpModel::new(ObjectiveSense::Maximize);
    let c: Vec<VarId> = (0..width).map(|j| model.add_continuous(format!("c_{j}"), -1.0, 1.0)).collect();
    let t = model.add_continuous("t", -(width as f64), width as f64);
    let y: Vec<VarId> = (0..cells.len()).map(|g| model.add_binary(format!("y_{g}"))).collect();
    for (g, cell) in cells.iter().enumerate() {
        let mut score = LinExpr::new();
        for j in 0..width {
            if cell.bits[j] == 1 {
                score.add_term(c[j], 1.0);
            }
        }
        score.add_term(t, -1.0).add_term(y[g], -big);
        model.add_constraint(format!("member_{g}"), &score, Sense::Ge, -big);
        model.add_constraint(format!("nonmember_{g}"), &score, Sense::Le, -eps);
    }
    let (o, b) = objective_block(&mut model, obj, &cells, &y);
    AuditModel { model, cells, y, columns: c, t: Some(t), o, b }
}

pub fn audit_conjunction_milp_with(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    time_limit: Option<f64>,
    solver: &Solver,
) -> Result<AuditResult, AuditError> {
    let start = Instant::now();
    let mut am = conjunction_model(ds, obj);
    am.model.time_limit = time_limit;
    let sol = solver.solve(&am.model)?;
    let subgroup = sol.has_incumbent().then(|| {
        let literals = (0..am.columns.len()).filter(|&j| sol.value(am.columns[j]) > 0.5).collect();
        Subgroup::from(Conjunction { literals, n_min: obj.n_min })
    });
    let found = Found { subgroup, status: sol.status, bound: sol.best_bound, nodes: sol.nodes as u64, warm_start_value: None };
    Ok(finish(ds, yhat, obj, found, start))
}

/// Linear-group audit; `warm` seeds the incumbent with its membership.
pub fn audit_linear_milp_with(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    warm: Option<&LinearThresholdGroup>,
    time_limit: Option<f64>,
    solver: &Solver,
) -> Result<AuditResult, AuditError> {
    let start = Instant::now();
    let eps = LINEAR_EPS;
    let mut am = linear_model(ds, obj, eps);
    am.model.time_limit = time_limit;
    let mut warm_value = None;
    if let Some(w) = warm.filter(|w| w.c.len() == ds.width()) {
        let inside: Vec<bool> = am.cells.iter().map(|c| w.contains_row(&c.bits)).collect();
        let units: i128 = am.cells.iter().zip(&inside).filter(|(_, m)| **m).map(|(c, _)| c.coef).sum();
        let mut start_point: Vec<(VarId, f64)> =
            am.y.iter().zip(&inside).map(|(&v, &m)| (v, if m { 1.0 } else { 0.0 })).collect();
        start_point.push((am.b, if units < 0 { 1.0 } else { 0.0 }));
        am.model.warm_start = Some(start_point);
        warm_value = Some(obj.weights.to_real(units.abs()));
    }
    let sol = solver.solve(&am.model)?;
    let subgroup = sol.has_incumbent().then(|| {
        let c: Vec<f64> = am.columns.iter().map(|&v| sol.value(v)).collect();
        let t = sol.value(am.t.expect("linear model has a threshold"));
        // Halfway into the strictness gap so membership survives solver tolerances.
        Subgroup::from(LinearThresholdGroup { c, t: t - eps / 2.0, eps })
    });
    let warm_start_value = if sol.warm_start_objective.is_some() { warm_value } else { None };
    let found = Found { subgroup, status: sol.status, bound: sol.best_bound, nodes: sol.nodes as u64, warm_start_value };
    Ok(finish(ds, yhat, obj, found, start))
}
