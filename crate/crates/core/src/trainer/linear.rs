//! Linear-classifier master: binary predictions linked to `(c, t)` by big-M rows.

use super::{class_masses, feature_key, group_rows, Master, MasterGroup, MasterVars, TrainConfig, TrainError};
use crate::dataset::AuditDataset;
use crate::milp::{LinExpr, MilpModel, ObjectiveSense, Sense, VarId};

const EPOCHS: usize = 300;
const STEP: f64 = 0.5;

/// Minimizes the sum of the two class error rates plus `(σ/d)·Σ s_j`, with one
/// prediction variable per distinct feature vector.
pub fn build_master_linear(ds: &AuditDataset, cfg: &TrainConfig) -> Result<Master, TrainError> {
    let (n0, n1) = class_masses(ds)?;
    let d = ds.feature_names().len();
    if d == 0 {
        return Err(TrainError::InvalidConfig("the dataset has no features".into()));
    }
    let features = ds.features();
    let (rows, row_group) = group_rows(ds.len(), |i| feature_key(&features[i]));

    let mut model = MilpModel::new(ObjectiveSense::Minimize);
    let c: Vec<_> = (0..d).map(|j| model.add_continuous(format!("c_{j}"), -1.0, 1.0)).collect();
    let t = model.add_continuous("t", -(d as f64), d as f64);
    let mut objective = LinExpr::constant(1.0);
    let mut groups = Vec::with_capacity(rows.len());
    let mut yhats = Vec::with_capacity(rows.len());
    let mut coefs = Vec::with_capacity(rows.len());
    for (g, members) in rows.into_iter().enumerate() {
        let yhat = model.add_binary(format!("yhat_{g}"));
        yhats.push(yhat);
        let x = &features[members[0]];
        let mut score = LinExpr::new();
        for j in 0..d {
            score.add_term(c[j], x[j]);
        }
        score.add_term(t, -1.0);
        // |c·x - t| <= |x|_1 + d bounds the score, so that is the tightest big-M.
        let big = x.iter().map(|v| v.abs()).sum::<f64>() + d as f64;
        let mut pos = score.clone();
        pos.add_term(yhat, -big);
        model.add_constraint(format!("pos_{g}"), &pos, Sense::Ge, -big);
        let mut neg = score;
        neg.add_term(yhat, -(big + cfg.eps));
        model.add_constraint(format!("neg_{g}"), &neg, Sense::Le, -cfg.eps);

        let (mut w0, mut w1, mut weight) = (0u64, 0u64, 0u64);
        for &i in &members {
            let w = ds.weights()[i];
            weight += w;
            if ds.labels()[i] {
                w1 += w;
            } else {
                w0 += w;
            }
        }
        objective.add_term(yhat, w0 as f64 / n0 - w1 as f64 / n1);
        coefs.push((w0 as f64 / n0, w1 as f64 / n1));
        groups.push(MasterGroup { yhat: LinExpr::var(yhat), rows: members, weight });
    }

    let s = (cfg.sparsity > 0.0).then(|| {
        (0..d)
            .map(|j| {
                let s = model.add_binary(format!("s_{j}"));
                let mut up = LinExpr::var(s);
                up.add_term(c[j], -1.0);
                model.add_constraint(format!("spars_pos_{j}"), &up, Sense::Ge, 0.0);
                let mut down = LinExpr::var(s);
                down.add_term(c[j], 1.0);
                model.add_constraint(format!("spars_neg_{j}"), &down, Sense::Ge, 0.0);
                objective.add_term(s, cfg.sparsity / d as f64);
                s
            })
            .collect()
    });
    model.set_objective(ObjectiveSense::Minimize, &objective);
    model.time_limit = cfg.master_time_limit;
    let xs: Vec<&[f64]> = groups.iter().map(|g: &MasterGroup| features[g.rows[0]].as_slice()).collect();
    model.warm_start = Some(logistic_start(&xs, &coefs, &yhats, s.as_deref(), cfg.eps));

    Ok(Master {
        model,
        vars: MasterVars::Linear { c, t, s, eps: cfg.eps, sigma: cfg.sparsity },
        groups,
        row_group,
        feature_names: ds.feature_names().to_vec(),
        sd_aux: None,
        cut_rows: Vec::new(),
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Starting point for the unconstrained master: a class-balanced logistic fit,
/// scaled into the coefficient box, thresholded where the master objective is
/// lowest among cuts leaving a margin of at least `eps` on both sides.
/// `coefs[g]` holds group `g`'s negative and positive mass, each over its class.
fn logistic_start(xs: &[&[f64]], coefs: &[(f64, f64)], yhats: &[VarId], s: Option<&[VarId]>, eps: f64) -> Vec<(VarId, f64)> {
    let d = xs.first().map_or(0, |x| x.len());
    let mut theta = vec![0.0; d];
    let mut bias = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..EPOCHS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &(neg, pos)) in xs.iter().zip(coefs) {
            let p = sigmoid(bias + theta.iter().zip(*x).map(|(a, b)| a * b).sum::<f64>());
            // Gradient of the balanced log loss: pos·(p - 1) + neg·p.
            let r = (pos + neg) * p - pos;
            for (g, &xj) in grad.iter_mut().zip(*x) {
                *g += r * xj;
            }
            gb += r;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= STEP * g;
        }
        bias -= STEP * gb;
    }
    let scale = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    if scale > 1e-12 {
        theta.iter_mut().for_each(|t| *t /= scale);
    }

    let mut order: Vec<(f64, usize)> =
        xs.iter().enumerate().map(|(g, x)| (theta.iter().zip(*x).map(|(a, b)| a * b).sum(), g)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    // Prefix k of `order` predicted positive; k = 0 predicts nothing.
    let (mut best_k, mut best, mut running) = (0, 0.0, 0.0);
    for k in 0..order.len() {
        let (neg, pos) = coefs[order[k].1];
        running += neg - pos;
        let gap_ok = order.get(k + 1).is_none_or(|next| order[k].0 - next.0 > 2.0 * eps);
        if gap_ok && running < best {
            best = running;
            best_k = k + 1;
        }
    }
    let mut start = vec![0.0; yhats.len()];
    for &(_, g) in &order[..best_k] {
        start[g] = 1.0;
    }
    let mut out: Vec<(VarId, f64)> = yhats.iter().copied().zip(start).collect();
    if let Some(s) = s {
        out.extend(s.iter().zip(&theta).map(|(&v, c)| (v, if c.abs() > 1e-12 { 1.0 } else { 0.0 })));
    }
    out
}
