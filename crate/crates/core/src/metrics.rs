//! SD, MSD, SPSF and FPSF on weighted empirical distributions.
//!
//! Every measure is a signed sum `Σ_{i∈S} a_i` followed by an absolute value.
//! [`SignedWeights`] stores the `a_i` as integers over a common positive scale,
//! so values, argmax sets and threshold tests are exact.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{AttributeGroup, AuditDataset};
use crate::exec::Exec;
use crate::subgroups::{self, conjunction_count, Conjunction, Subgroup, SubgroupError};

pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("a conditional distribution has zero weight")]
    EmptyConditional,
    #[error("no rows with y = 0")]
    NoNegativeClass,
    #[error("classifier is constant, the conversion is undefined")]
    DegenerateClassifier,
    #[error("{count} conjunctions exceed the enumeration cap of {cap}")]
    EnumerationCapExceeded { count: u128, cap: u128 },
    #[error("prediction vector has {got} entries, dataset has {expected} rows")]
    LengthMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Subgroup(#[from] SubgroupError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    SD,
    SPSF,
    FPSF,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::SD => "SD",
            Measure::SPSF => "SPSF",
            Measure::FPSF => "FPSF",
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sd" | "msd" => Ok(Measure::SD),
            "spsf" => Ok(Measure::SPSF),
            "fpsf" => Ok(Measure::FPSF),
            _ => Err(format!("unknown measure `{s}` (expected sd, spsf or fpsf)")),
        }
    }
}

/// Classifier outputs aligned with dataset rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionVector {
    values: Vec<bool>,
    pos_mass: u64,
    neg_mass: u64,
}

impl PredictionVector {
    pub fn new(ds: &AuditDataset, values: Vec<bool>) -> Result<Self, MetricsError> {
        if values.len() != ds.len() {
            return Err(MetricsError::LengthMismatch { got: values.len(), expected: ds.len() });
        }
        let pos_mass = values.iter().zip(ds.weights()).filter(|(v, _)| **v).map(|(_, w)| w).sum();
        Ok(Self { values, pos_mass, neg_mass: ds.total_weight() - pos_mass })
    }

    /// Uses the labels themselves as predictions (bias in the data).
    pub fn from_labels(ds: &AuditDataset) -> Self {
        Self::new(ds, ds.labels().to_vec()).expect("labels align with rows")
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn pos_mass(&self) -> u64 {
        self.pos_mass
    }

    pub fn neg_mass(&self) -> u64 {
        self.neg_mass
    }

    pub fn p_h(&self) -> f64 {
        self.pos_mass as f64 / (self.pos_mass + self.neg_mass) as f64
    }

    pub fn positive_rows(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i]).collect()
    }

    pub fn negative_rows(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| !self.values[i]).collect()
    }

    /// Restriction to rows `idx`, weighted by `ds` (the restricted dataset).
    pub fn restrict(&self, ds: &AuditDataset, idx: &[usize]) -> Result<Self, MetricsError> {
        Self::new(ds, idx.iter().map(|&i| self.values[i]).collect())
    }
}

/// Per-row signed contributions `scaled[i] / scale` of a measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedWeights {
    pub measure: Measure,
    pub scaled: Vec<i128>,
    pub scale: i128,
    pub denominators: Denominators,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Denominators {
    pub p_h: f64,
    pub p_hbar: f64,
    pub p_y0: f64,
}

fn p_y0(ds: &AuditDataset) -> f64 {
    ds.class_counts().0 as f64 / ds.total_weight() as f64
}

/// Largest integer `k` with `k ≤ x`, tolerant to rounding just below an integer.
pub fn snap_units(x: f64) -> i128 {
    (x + 1e-9 * x.abs().max(1.0)).floor() as i128
}

impl SignedWeights {
    /// `P₁(S) − P₂(S)` for weighted index sets. Rows may appear in both parts.
    pub fn sd(ds: &AuditDataset, part1: &[usize], part2: &[usize]) -> Result<Self, MetricsError> {
        let w = ds.weights();
        let m1: i128 = part1.iter().map(|&i| w[i] as i128).sum();
        let m2: i128 = part2.iter().map(|&i| w[i] as i128).sum();
        if m1 == 0 || m2 == 0 {
            return Err(MetricsError::EmptyConditional);
        }
        let mut scaled = vec![0i128; ds.len()];
        for &i in part1 {
            scaled[i] += w[i] as i128 * m2;
        }
        for &i in part2 {
            scaled[i] -= w[i] as i128 * m1;
        }
        let total = ds.total_weight() as f64;
        Ok(Self {
            measure: Measure::SD,
            scaled,
            scale: m1 * m2,
            denominators: Denominators { p_h: m1 as f64 / total, p_hbar: m2 as f64 / total, p_y0: p_y0(ds) },
        })
    }

    /// SD between predicted-positive and predicted-negative rows.
    pub fn sd_conditional(ds: &AuditDataset, yhat: &PredictionVector) -> Result<Self, MetricsError> {
        Self::sd(ds, &yhat.positive_rows(), &yhat.negative_rows())
    }

    /// `P(S)·(P(h=1) − P(h=1|S))`.
    pub fn spsf(ds: &AuditDataset, yhat: &PredictionVector) -> Self {
        let total = ds.total_weight() as i128;
        let pos = yhat.pos_mass() as i128;
        let scaled = ds
            .weights()
            .iter()
            .zip(yhat.values())
            .map(|(&w, &h)| w as i128 * (pos - if h { total } else { 0 }))
            .collect();
        Self {
            measure: Measure::SPSF,
            scaled,
            scale: total * total,
            denominators: Denominators { p_h: yhat.p_h(), p_hbar: 1.0 - yhat.p_h(), p_y0: p_y0(ds) },
        }
    }

    /// `P(S, y=0)·(P(h=1|y=0) − P(h=1|S, y=0))`.
    pub fn fpsf(ds: &AuditDataset, yhat: &PredictionVector) -> Result<Self, MetricsError> {
        let total = ds.total_weight() as i128;
        let (n0, _) = ds.class_counts();
        if n0 == 0 {
            return Err(MetricsError::NoNegativeClass);
        }
        let n0 = n0 as i128;
        let pos0: i128 = (0..ds.len())
            .filter(|&i| !ds.labels()[i] && yhat.values()[i])
            .map(|i| ds.weights()[i] as i128)
            .sum();
        let scaled = (0..ds.len())
            .map(|i| {
                if ds.labels()[i] {
                    0
                } else {
                    ds.weights()[i] as i128 * (pos0 - if yhat.values()[i] { n0 } else { 0 })
                }
            })
            .collect();
        let p_h0 = pos0 as f64 / n0 as f64;
        Ok(Self {
            measure: Measure::FPSF,
            scaled,
            scale: total * n0,
            denominators: Denominators { p_h: p_h0, p_hbar: 1.0 - p_h0, p_y0: n0 as f64 / total as f64 },
        })
    }

    pub fn for_measure(measure: Measure, ds: &AuditDataset, yhat: &PredictionVector) -> Result<Self, MetricsError> {
        match measure {
            Measure::SD => Self::sd_conditional(ds, yhat),
            Measure::SPSF => Ok(Self::spsf(ds, yhat)),
            Measure::FPSF => Self::fpsf(ds, yhat),
        }
    }

    pub fn sum(&self, members: &[bool]) -> i128 {
        self.scaled.iter().zip(members).filter(|(_, m)| **m).map(|(a, _)| *a).sum()
    }

    pub fn to_real(&self, units: i128) -> f64 {
        units as f64 / self.scale as f64
    }

    /// Largest integer sum magnitude that does not exceed `gamma`.
    pub fn threshold_units(&self, gamma: f64) -> i128 {
        snap_units(gamma * self.scale as f64)
    }

    /// Per-row real coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        self.scaled.iter().map(|&a| self.to_real(a)).collect()
    }

    /// Largest attainable `|Σ_S a_i|` (the sum of either sign's mass).
    pub fn max_units(&self) -> i128 {
        let pos: i128 = self.scaled.iter().filter(|a| **a > 0).sum();
        let neg: i128 = -self.scaled.iter().filter(|a| **a < 0).sum::<i128>();
        pos.max(neg)
    }

    pub fn report(&self, subgroup: Subgroup, members: &[bool]) -> MetricReport {
        let s = self.sum(members);
        MetricReport {
            measure: self.measure,
            value: self.to_real(s.abs()),
            raw_signed: self.to_real(s),
            subgroup,
            denominators: self.denominators,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub measure: Measure,
    pub value: f64,
    pub raw_signed: f64,
    pub subgroup: Subgroup,
    pub denominators: Denominators,
}

impl MetricReport {
    pub fn to_json(&self, groups: &[AttributeGroup]) -> Value {
        json!({
            "measure": self.measure.name(),
            "value": self.value,
            "raw_signed": self.raw_signed,
            "subgroup": self.subgroup.to_json(groups),
            "denominators": {
                "p_h": self.denominators.p_h,
                "p_hbar": self.denominators.p_hbar,
                "p_y0": self.denominators.p_y0,
            },
        })
    }
}

pub fn subgroup_discrepancy(
    ds: &AuditDataset,
    part1: &[usize],
    part2: &[usize],
    s: &Subgroup,
) -> Result<MetricReport, MetricsError> {
    let sw = SignedWeights::sd(ds, part1, part2)?;
    let members = subgroups::membership(s, ds)?;
    Ok(sw.report(s.clone(), &members))
}

pub fn spsf(ds: &AuditDataset, yhat: &PredictionVector, s: &Subgroup) -> Result<MetricReport, MetricsError> {
    let members = subgroups::membership(s, ds)?;
    Ok(SignedWeights::spsf(ds, yhat).report(s.clone(), &members))
}

pub fn fpsf(ds: &AuditDataset, yhat: &PredictionVector, s: &Subgroup) -> Result<MetricReport, MetricsError> {
    let members = subgroups::membership(s, ds)?;
    Ok(SignedWeights::fpsf(ds, yhat)?.report(s.clone(), &members))
}

/// Distinct protected vector with its summed signed weight and row mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtectedCell {
    pub codes: Vec<u32>,
    pub bits: Vec<u8>,
    pub coef: i128,
    pub weight: u64,
}

/// Collapses rows with identical protected vectors, in first-occurrence order.
pub fn collapse(ds: &AuditDataset, sw: &SignedWeights) -> Vec<ProtectedCell> {
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    let mut cells: Vec<ProtectedCell> = Vec::new();
    for i in 0..ds.len() {
        let bits = ds.protected_row(i);
        match index.get(bits) {
            Some(&k) => {
                cells[k].coef += sw.scaled[i];
                cells[k].weight += ds.weights()[i];
            }
            None => {
                index.insert(bits, cells.len());
                cells.push(ProtectedCell {
                    codes: ds.codes(i).to_vec(),
                    bits: bits.to_vec(),
                    coef: sw.scaled[i],
                    weight: ds.weights()[i],
                });
            }
        }
    }
    cells
}

/// Exhaustive search result: the best `|Σ a_i|` and every conjunction attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub best_units: i128,
    pub value: f64,
    pub argmax: Vec<Conjunction>,
    pub visited: u64,
}

struct Walker<'a> {
    groups: &'a [AttributeGroup],
    cells: &'a [ProtectedCell],
    best: i128,
    argmax: Vec<Conjunction>,
    visited: u64,
    lits: Vec<usize>,
}

impl Walker<'_> {
    fn visit(&mut self, members: &[usize]) {
        self.visited += 1;
        let s: i128 = members.iter().map(|&k| self.cells[k].coef).sum::<i128>().abs();
        if s > self.best {
            self.best = s;
            self.argmax.clear();
        }
        if s == self.best {
            self.argmax.push(Conjunction { literals: self.lits.clone(), n_min: 0 });
        }
    }

    fn descend(&mut self, members: &[usize], next_attr: usize) {
        for a in next_attr..self.groups.len() {
            for v in 0..self.groups[a].len() {
                let sub: Vec<usize> = members.iter().copied().filter(|&k| self.cells[k].codes[a] as usize == v).collect();
                self.lits.push(self.groups[a].start + v);
                self.visit(&sub);
                self.descend(&sub, a + 1);
                self.lits.pop();
            }
        }
    }
}

/// Maximizes `|Σ_{i∈S} a_i|` over every nonempty conjunction, returning all
/// maximizers in lexicographic order. Subtrees rooted at each first literal
/// may run in parallel; merging follows literal order so output is identical
/// in every mode.
pub fn enumerate_argmax(
    ds: &AuditDataset,
    sw: &SignedWeights,
    cap: u128,
    exec: Exec,
) -> Result<Enumeration, MetricsError> {
    let groups = ds.groups();
    let count = conjunction_count(groups);
    if count > cap {
        return Err(MetricsError::EnumerationCapExceeded { count, cap });
    }
    let cells = collapse(ds, sw);
    let roots: Vec<(usize, usize)> =
        groups.iter().enumerate().flat_map(|(a, g)| (0..g.len()).map(move |v| (a, v))).collect();
    let parts = exec.map(&roots, |&(a, v)| {
        let mut w = Walker { groups, cells: &cells, best: -1, argmax: Vec::new(), visited: 0, lits: vec![groups[a].start + v] };
        let members: Vec<usize> = (0..cells.len()).filter(|&k| cells[k].codes[a] as usize == v).collect();
        w.visit(&members);
        w.descend(&members, a + 1);
        (w.best, w.argmax, w.visited)
    });
    let mut out = Enumeration { best_units: -1, value: 0.0, argmax: Vec::new(), visited: 0 };
    for (best, argmax, visited) in parts {
        out.visited += visited;
        if best > out.best_units {
            out.best_units = best;
            out.argmax = argmax;
        } else if best == out.best_units {
            out.argmax.extend(argmax);
        }
    }
    out.best_units = out.best_units.max(0);
    out.value = sw.to_real(out.best_units);
    Ok(out)
}

/// Maximum subgroup discrepancy between two weighted parts, with all maximizers.
pub fn msd_enumerate(
    ds: &AuditDataset,
    part1: &[usize],
    part2: &[usize],
) -> Result<(f64, Vec<Subgroup>), MetricsError> {
    msd_enumerate_with(ds, part1, part2, DEFAULT_ENUMERATION_CAP, Exec::default())
}

pub fn msd_enumerate_with(
    ds: &AuditDataset,
    part1: &[usize],
    part2: &[usize],
    cap: u128,
    exec: Exec,
) -> Result<(f64, Vec<Subgroup>), MetricsError> {
    let sw = SignedWeights::sd(ds, part1, part2)?;
    let e = enumerate_argmax(ds, &sw, cap, exec)?;
    Ok((e.value, e.argmax.into_iter().map(Subgroup::from).collect()))
}

pub fn spsf_from_sd(sd_value: f64, p_h: f64, p_hbar: f64) -> Result<f64, MetricsError> {
    if p_h <= 0.0 || p_h >= 1.0 || p_hbar <= 0.0 || p_hbar >= 1.0 {
        return Err(MetricsError::DegenerateClassifier);
    }
    Ok(sd_value * p_h * p_hbar)
}

pub fn fpsf_from_spsf_conditional(spsf_on_y0: f64, p_y0: f64) -> f64 {
    p_y0 * spsf_on_y0
}

/// SD threshold equivalent to an SPSF (or, given `p_y0`, FPSF) threshold `gamma`.
/// In FPSF mode `p_h` is the positive rate among `y = 0` rows.
pub fn gamma_bound_for_msd(gamma: f64, p_h: f64, p_y0: Option<f64>) -> Result<f64, MetricsError> {
    if p_h <= 0.0 || p_h >= 1.0 {
        return Err(MetricsError::DegenerateClassifier);
    }
    let denom = p_h * (1.0 - p_h) * p_y0.unwrap_or(1.0);
    if denom <= 0.0 {
        return Err(MetricsError::DegenerateClassifier);
    }
    Ok(gamma / denom)
}
