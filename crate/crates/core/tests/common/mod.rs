//! Random instance generators and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use fairmio::dataset::AuditDataset;
use fairmio::metrics::PredictionVector;
use fairmio::milp::{LinExpr, MilpModel, ObjectiveSense, Sense, VarId};
use fairmio::subgroups::{enumerate_conjunctions, Conjunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const VALUES: [&str; 4] = ["v0", "v1", "v2", "v3"];

/// Random attribute cardinalities (each 2..=max_card) with at most `max_cols` one-hot columns.
pub fn random_cards(r: &mut impl Rng, max_attrs: usize, max_card: usize, max_cols: usize) -> Vec<usize> {
    let attrs = r.gen_range(1..=max_attrs);
    let mut cards = Vec::new();
    let mut used = 0;
    for _ in 0..attrs {
        let c = r.gen_range(2..=max_card);
        if used + c > max_cols {
            break;
        }
        used += c;
        cards.push(c);
    }
    if cards.is_empty() {
        cards.push(2);
    }
    cards
}

/// Random weighted dataset; features are the protected one-hots.
pub fn random_dataset(r: &mut impl Rng, cards: &[usize], n: usize, max_weight: u64) -> AuditDataset {
    let attrs: Vec<(&str, &[&str])> = cards.iter().enumerate().map(|(a, &c)| (NAMES[a], &VALUES[..c])).collect();
    let codes: Vec<Vec<usize>> = (0..n).map(|_| cards.iter().map(|&c| r.gen_range(0..c)).collect()).collect();
    let labels: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
    let weights: Vec<u64> = (0..n).map(|_| r.gen_range(1..=max_weight)).collect();
    let mut ds = AuditDataset::from_codes(&attrs, &codes, labels, weights).unwrap();
    // Guarantee both classes.
    if ds.class_counts().0 == 0 || ds.class_counts().1 == 0 {
        let mut labels = ds.labels().to_vec();
        labels[0] = !labels[0];
        ds = AuditDataset::from_codes(&attrs, &codes, labels, ds.weights().to_vec()).unwrap();
    }
    ds
}

/// Random predictions with both values present, and both present among `y = 0` rows when possible.
pub fn random_predictions(r: &mut impl Rng, ds: &AuditDataset, bias: f64) -> PredictionVector {
    let n = ds.len();
    let mut v: Vec<bool> = (0..n)
        .map(|i| {
            let p = if ds.protected_row(i)[0] == 1 { 0.5 + bias } else { 0.5 - bias };
            r.gen_bool(p.clamp(0.05, 0.95))
        })
        .collect();
    let neg = ds.rows_with_label(false);
    if neg.len() >= 2 {
        v[neg[0]] = true;
        v[neg[1]] = false;
    } else {
        v[0] = true;
        v[n - 1] = false;
    }
    PredictionVector::new(ds, v).unwrap()
}

/// Every nonempty conjunction with its membership vector.
pub fn all_conjunctions(ds: &AuditDataset) -> Vec<(Conjunction, Vec<bool>)> {
    enumerate_conjunctions(ds.groups())
        .map(|c| {
            let m = ds.protected().iter().map(|bits| c.literals.iter().all(|&j| bits[j] == 1)).collect();
            (c, m)
        })
        .collect()
}

/// Weighted probability of `members` within `part`.
pub fn prob(ds: &AuditDataset, part: &[usize], members: &[bool]) -> f64 {
    let w = ds.weights();
    let tot: u64 = part.iter().map(|&i| w[i]).sum();
    let inside: u64 = part.iter().filter(|&&i| members[i]).map(|&i| w[i]).sum();
    inside as f64 / tot as f64
}

/// Definition-level SPSF: P(S)·|P(h) − P(h|S)|.
pub fn spsf_oracle(ds: &AuditDataset, yhat: &[bool], members: &[bool]) -> f64 {
    let all: Vec<usize> = (0..ds.len()).collect();
    let in_s: Vec<usize> = all.iter().copied().filter(|&i| members[i]).collect();
    let p_s = prob(ds, &all, members);
    if in_s.is_empty() {
        return 0.0;
    }
    p_s * (prob(ds, &all, yhat) - prob(ds, &in_s, yhat)).abs()
}

/// Definition-level FPSF: P(S, y=0)·|P(h|y=0) − P(h|S, y=0)|.
pub fn fpsf_oracle(ds: &AuditDataset, yhat: &[bool], members: &[bool]) -> f64 {
    let all: Vec<usize> = (0..ds.len()).collect();
    let d0: Vec<usize> = ds.rows_with_label(false);
    let s0: Vec<usize> = d0.iter().copied().filter(|&i| members[i]).collect();
    if s0.is_empty() {
        return 0.0;
    }
    let joint: Vec<bool> = (0..ds.len()).map(|i| members[i] && !ds.labels()[i]).collect();
    prob(ds, &all, &joint) * (prob(ds, &d0, yhat) - prob(ds, &s0, yhat)).abs()
}

/// Definition-level SD between predicted classes.
pub fn sd_oracle(ds: &AuditDataset, yhat: &[bool], members: &[bool]) -> f64 {
    let pos: Vec<usize> = (0..ds.len()).filter(|&i| yhat[i]).collect();
    let neg: Vec<usize> = (0..ds.len()).filter(|&i| !yhat[i]).collect();
    (prob(ds, &pos, members) - prob(ds, &neg, members)).abs()
}

/// Maximum of `f` over all conjunctions, with every membership vector attaining it
/// within `tol`.
pub fn brute_max(ds: &AuditDataset, f: impl Fn(&[bool]) -> f64, tol: f64) -> (f64, Vec<Vec<bool>>) {
    let scored: Vec<(f64, Vec<bool>)> = all_conjunctions(ds).into_iter().map(|(_, m)| (f(&m), m)).collect();
    let best = scored.iter().map(|s| s.0).fold(0.0, f64::max);
    let arg = scored.into_iter().filter(|s| s.0 >= best - tol).map(|s| s.1).collect();
    (best, arg)
}

/// Random model over `nb` binaries and one bounded continuous `z`, with small
/// integer data so that the enumeration oracle below is exact.
pub fn random_milp(r: &mut impl Rng, nb: usize) -> MilpModel {
    let sense = if r.gen_bool(0.5) { ObjectiveSense::Minimize } else { ObjectiveSense::Maximize };
    let mut m = MilpModel::new(sense);
    let x: Vec<VarId> = (0..nb).map(|i| m.add_binary(format!("x{i}"))).collect();
    let z = m.add_continuous("z", -f64::from(r.gen_range(0..=5)), f64::from(r.gen_range(0..=5)));
    let mut obj = LinExpr::new();
    for &v in &x {
        obj.add_term(v, f64::from(r.gen_range(-5..=5)));
    }
    obj.add_term(z, f64::from(r.gen_range(-3..=3)));
    m.set_objective(sense, &obj);
    for k in 0..r.gen_range(1..=6) {
        let mut row = LinExpr::new();
        for &v in &x {
            if r.gen_bool(0.6) {
                row.add_term(v, f64::from(r.gen_range(-4..=4)));
            }
        }
        row.add_term(z, f64::from(r.gen_range(-3..=3)));
        let s = match r.gen_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Le,
            _ => Sense::Ge,
        };
        m.add_constraint(format!("r{k}"), &row, s, f64::from(r.gen_range(-4..=6)));
    }
    m
}

/// Optimum of a [`random_milp`] model by trying every binary assignment and
/// placing `z` at the better end of its feasible interval.
pub fn enumerate_milp(m: &MilpModel) -> Option<f64> {
    let nb = m.variables.len() - 1;
    let zi = nb;
    let maximize = m.objective.sense == ObjectiveSense::Maximize;
    let mut best: Option<f64> = None;
    for mask in 0u64..1 << nb {
        let x: Vec<f64> = (0..nb).map(|i| ((mask >> i) & 1) as f64).collect();
        let (mut lo, mut hi) = (m.variables[zi].lower, m.variables[zi].upper);
        let mut ok = true;
        for c in &m.constraints {
            let (mut s, mut b) = (0.0, 0.0);
            for &(v, a) in &c.terms {
                if v.0 == zi {
                    b += a;
                } else {
                    s += a * x[v.0];
                }
            }
            let rest = c.rhs - s;
            if b == 0.0 {
                ok &= match c.sense {
                    Sense::Le => rest >= 0.0,
                    Sense::Ge => rest <= 0.0,
                    Sense::Eq => rest == 0.0,
                };
                continue;
            }
            let q = rest / b;
            match (c.sense, b > 0.0) {
                (Sense::Eq, _) => {
                    lo = lo.max(q);
                    hi = hi.min(q);
                }
                (Sense::Le, true) | (Sense::Ge, false) => hi = hi.min(q),
                _ => lo = lo.max(q),
            }
        }
        if !ok || lo > hi + 1e-12 {
            continue;
        }
        let mut vals = x;
        vals.push(0.0);
        let e: f64 = m.objective.terms.iter().filter(|t| t.0 .0 == zi).map(|t| t.1).sum();
        vals[zi] = if (e > 0.0) == maximize { hi } else { lo };
        let v = m.objective_value(&vals);
        best = Some(match best {
            None => v,
            Some(b) if maximize => b.max(v),
            Some(b) => b.min(v),
        });
    }
    best
}
