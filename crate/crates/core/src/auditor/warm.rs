//! Logistic-regression starting point for linear-group audits.

use super::AuditError;
use crate::dataset::AuditDataset;
use crate::metrics::{collapse, SignedWeights};
use crate::subgroups::LinearThresholdGroup;

const EPOCHS: usize = 500;
const STEP: f64 = 0.1;
const L2: f64 = 1e-3;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits a weighted logistic separator of `part1` from `part2` on the protected
/// columns, scales it so the largest coefficient has magnitude 1, then picks
/// the threshold with the largest SD between the parts along that direction.
pub fn logistic_warm_start(
    ds: &AuditDataset,
    part1: &[usize],
    part2: &[usize],
) -> Result<LinearThresholdGroup, AuditError> {
    let sd = SignedWeights::sd(ds, part1, part2)?;
    let m = ds.width();
    let w = ds.weights();
    let samples: Vec<(usize, f64, f64)> = part1
        .iter()
        .map(|&i| (i, 1.0, w[i] as f64))
        .chain(part2.iter().map(|&i| (i, 0.0, w[i] as f64)))
        .collect();
    let total: f64 = samples.iter().map(|s| s.2).sum();

    let mut theta = vec![0.0; m];
    let mut bias = 0.0;
    let mut grad = vec![0.0; m];
    for _ in 0..EPOCHS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for &(i, target, wi) in &samples {
            let bits = ds.protected_row(i);
            let z = bias + theta.iter().zip(bits).map(|(t, &b)| if b == 1 { *t } else { 0.0 }).sum::<f64>();
            let r = wi * (sigmoid(z) - target) / total;
            for (g, &b) in grad.iter_mut().zip(bits) {
                if b == 1 {
                    *g += r;
                }
            }
            gb += r;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= STEP * (g + L2 * *t);
        }
        bias -= STEP * gb;
    }

    let scale = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let c: Vec<f64> = if scale > 1e-12 { theta.iter().map(|t| t / scale).collect() } else { vec![0.0; m] };

    // Threshold sweep over midpoints of distinct cell scores.
    let cells = collapse(ds, &sd);
    let mut scored: Vec<(f64, i128)> = cells
        .iter()
        .map(|cell| (c.iter().zip(&cell.bits).map(|(cj, &b)| if b == 1 { *cj } else { 0.0 }).sum(), cell.coef))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best_t = scored.first().map_or(0.0, |s| s.0) + 0.5;
    let mut best_units = 0i128;
    let mut running = 0i128;
    for k in 0..scored.len() {
        running += scored[k].1;
        let next = scored.get(k + 1).map(|s| s.0);
        match next {
            Some(z) if z == scored[k].0 => continue,
            Some(z) if running.abs() > best_units => {
                best_units = running.abs();
                best_t = 0.5 * (scored[k].0 + z);
            }
            Some(_) => {}
            None => {}
        }
    }
    let limit = m as f64;
    Ok(LinearThresholdGroup { c, t: best_t.clamp(-limit, limit), eps: super::LINEAR_EPS })
}
