//! Conjunction and linear-threshold subgroups over protected one-hot columns.

use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{AttributeGroup, AuditDataset};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_PRECISION: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum SubgroupError {
    #[error("column index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("attribute `{0}` appears twice in a conjunction")]
    RepeatedAttribute(String),
    #[error("coefficient vector has length {got}, expected {expected}")]
    WidthMismatch { got: usize, expected: usize },
    #[error("cannot read subgroup: {0}")]
    Malformed(String),
}

/// AND of attribute-value literals, stored as sorted one-hot column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conjunction {
    pub literals: Vec<usize>,
    /// Smallest member weight a search may return.
    pub n_min: u64,
}

impl Conjunction {
    /// Sorts the literals and checks at most one per attribute.
    pub fn new(mut literals: Vec<usize>, groups: &[AttributeGroup]) -> Result<Self, SubgroupError> {
        literals.sort_unstable();
        literals.dedup();
        let width: usize = groups.iter().map(AttributeGroup::len).sum();
        let mut last_attr = None;
        for &j in &literals {
            let a = attribute_of(groups, j).ok_or(SubgroupError::IndexOutOfRange { index: j, width })?;
            if last_attr == Some(a) {
                return Err(SubgroupError::RepeatedAttribute(groups[a].name.clone()));
            }
            last_attr = Some(a);
        }
        Ok(Self { literals, n_min: 0 })
    }

    pub fn contains_row(&self, bits: &[u8]) -> bool {
        self.literals.iter().all(|&j| bits[j] == 1)
    }

    /// The same member set as a linear threshold group: unit weights on the
    /// literals, threshold halfway below their count.
    pub fn to_linear(&self, width: usize) -> LinearThresholdGroup {
        let mut c = vec![0.0; width];
        for &j in &self.literals {
            c[j] = 1.0;
        }
        LinearThresholdGroup { c, t: self.literals.len() as f64 - 0.5, eps: DEFAULT_EPS }
    }
}

/// Members satisfy `c·x ≥ t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearThresholdGroup {
    pub c: Vec<f64>,
    pub t: f64,
    pub eps: f64,
}

impl LinearThresholdGroup {
    pub fn score(&self, bits: &[u8]) -> f64 {
        self.c.iter().zip(bits).map(|(c, &b)| if b == 1 { *c } else { 0.0 }).sum()
    }

    pub fn contains_row(&self, bits: &[u8]) -> bool {
        self.score(bits) >= self.t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Subgroup {
    Conjunction(Conjunction),
    Linear(LinearThresholdGroup),
}

impl From<Conjunction> for Subgroup {
    fn from(c: Conjunction) -> Self {
        Subgroup::Conjunction(c)
    }
}

impl From<LinearThresholdGroup> for Subgroup {
    fn from(g: LinearThresholdGroup) -> Self {
        Subgroup::Linear(g)
    }
}

impl Subgroup {
    pub fn as_conjunction(&self) -> Option<&Conjunction> {
        match self {
            Subgroup::Conjunction(c) => Some(c),
            Subgroup::Linear(_) => None,
        }
    }

    fn check_width(&self, width: usize) -> Result<(), SubgroupError> {
        match self {
            Subgroup::Conjunction(c) => match c.literals.iter().find(|&&j| j >= width) {
                Some(&j) => Err(SubgroupError::IndexOutOfRange { index: j, width }),
                None => Ok(()),
            },
            Subgroup::Linear(g) if g.c.len() != width => {
                Err(SubgroupError::WidthMismatch { got: g.c.len(), expected: width })
            }
            Subgroup::Linear(_) => Ok(()),
        }
    }

    pub fn contains_row(&self, bits: &[u8]) -> bool {
        match self {
            Subgroup::Conjunction(c) => c.contains_row(bits),
            Subgroup::Linear(g) => g.contains_row(bits),
        }
    }

    pub fn to_json(&self, groups: &[AttributeGroup]) -> Value {
        match self {
            Subgroup::Conjunction(c) => {
                let literals: Vec<Value> = c
                    .literals
                    .iter()
                    .map(|&j| {
                        let (a, v) = locate(groups, j);
                        json!({"attr": groups[a].name, "value": groups[a].values[v]})
                    })
                    .collect();
                json!({"kind": "conjunction", "literals": literals})
            }
            Subgroup::Linear(g) => json!({"kind": "linear", "c": g.c, "t": g.t, "eps": g.eps}),
        }
    }

    pub fn from_json(value: &Value, groups: &[AttributeGroup]) -> Result<Self, SubgroupError> {
        let bad = |m: &str| SubgroupError::Malformed(m.to_string());
        match value.get("kind").and_then(Value::as_str) {
            Some("conjunction") => {
                let lits = value.get("literals").and_then(Value::as_array).ok_or_else(|| bad("missing literals"))?;
                let mut idx = Vec::new();
                for l in lits {
                    let attr = l.get("attr").and_then(Value::as_str).ok_or_else(|| bad("literal without attr"))?;
                    let val = l.get("value").and_then(Value::as_str).ok_or_else(|| bad("literal without value"))?;
                    let g = groups.iter().find(|g| g.name == attr).ok_or_else(|| bad("unknown attribute"))?;
                    let v = g.values.iter().position(|x| x == val).ok_or_else(|| bad("unknown attribute value"))?;
                    idx.push(g.start + v);
                }
                Ok(Conjunction::new(idx, groups)?.into())
            }
            Some("linear") => {
                let c = value
                    .get("c")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing c"))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| bad("non-numeric coefficient")))
                    .collect::<Result<Vec<_>, _>>()?;
                let t = value.get("t").and_then(Value::as_f64).ok_or_else(|| bad("missing t"))?;
                let eps = value.get("eps").and_then(Value::as_f64).unwrap_or(DEFAULT_EPS);
                Ok(LinearThresholdGroup { c, t, eps }.into())
            }
            _ => Err(bad("kind must be `conjunction` or `linear`")),
        }
    }
}

fn attribute_of(groups: &[AttributeGroup], j: usize) -> Option<usize> {
    groups.iter().position(|g| g.range().contains(&j))
}

/// `(attribute index, value index)` of one-hot column `j`.
pub fn locate(groups: &[AttributeGroup], j: usize) -> (usize, usize) {
    let a = attribute_of(groups, j).expect("column index within dataset width");
    (a, j - groups[a].start)
}

/// Indicator of `s` for every row of `ds`.
pub fn membership(s: &Subgroup, ds: &AuditDataset) -> Result<Vec<bool>, SubgroupError> {
    s.check_width(ds.width())?;
    Ok(ds.protected().iter().map(|bits| s.contains_row(bits)).collect())
}

/// Iterates every nonempty conjunction with at most one literal per
/// attribute, in lexicographic order of the sorted column-index lists.
pub struct Conjunctions {
    attr_of: Vec<usize>,
    next_attr_start: Vec<Option<usize>>,
    cur: Vec<usize>,
    started: bool,
}

impl Iterator for Conjunctions {
    type Item = Conjunction;

    fn next(&mut self) -> Option<Conjunction> {
        let m = self.attr_of.len();
        if !self.started {
            self.started = true;
            if m == 0 {
                return None;
            }
            self.cur.push(0);
            return Some(Conjunction { literals: self.cur.clone(), n_min: 0 });
        }
        let last = *self.cur.last()?;
        if let Some(s) = self.next_attr_start[self.attr_of[last]] {
            self.cur.push(s);
        } else {
            loop {
                let last = self.cur.pop()?;
                if last + 1 < m {
                    self.cur.push(last + 1);
                    break;
                }
            }
        }
        Some(Conjunction { literals: self.cur.clone(), n_min: 0 })
    }
}

pub fn enumerate_conjunctions(groups: &[AttributeGroup]) -> Conjunctions {
    let attr_of = groups.iter().enumerate().flat_map(|(a, g)| std::iter::repeat_n(a, g.len())).collect();
    let next_attr_start = (0..groups.len()).map(|a| groups.get(a + 1).map(|g| g.start)).collect();
    Conjunctions { attr_of, next_attr_start, cur: Vec::new(), started: false }
}

/// `Π(cᵢ+1) − 1`, saturating.
pub fn conjunction_count(groups: &[AttributeGroup]) -> u128 {
    groups
        .iter()
        .fold(1u128, |acc, g| acc.saturating_mul(g.len() as u128 + 1))
        .saturating_sub(1)
}

/// Human-readable form using attribute and value names.
pub fn describe(s: &Subgroup, groups: &[AttributeGroup]) -> String {
    describe_with_precision(s, groups, DEFAULT_PRECISION)
}

pub fn describe_with_precision(s: &Subgroup, groups: &[AttributeGroup], precision: usize) -> String {
    match s {
        Subgroup::Conjunction(c) if c.literals.is_empty() => "⊤ (entire population)".to_string(),
        Subgroup::Conjunction(c) => c
            .literals
            .iter()
            .map(|&j| {
                let (a, v) = locate(groups, j);
                format!("{} = {}", groups[a].name, groups[a].values[v])
            })
            .collect::<Vec<_>>()
            .join(" ∧ "),
        Subgroup::Linear(g) => {
            let names: Vec<String> = groups
                .iter()
                .flat_map(|gr| gr.values.iter().map(move |v| format!("[{} = {v}]", gr.name)))
                .collect();
            let fmt = |x: f64| format!("{:.*}", precision, x.abs());
            let mut out = String::new();
            for (j, &cj) in g.c.iter().enumerate() {
                if fmt(cj).trim_start_matches(['0', '.']).is_empty() {
                    continue;
                }
                let name = names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
                let sign = if cj < 0.0 { "−" } else { "+" };
                if out.is_empty() {
                    if cj < 0.0 {
                        out.push('−');
                    }
                } else {
                    out.push_str(&format!(" {sign} "));
                }
                out.push_str(&format!("{}·{name}", fmt(cj)));
            }
            if out.is_empty() {
                out.push('0');
            }
            let t = if g.t < 0.0 { format!("−{}", fmt(g.t)) } else { fmt(g.t) };
            format!("{out} ≥ {t}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> AuditDataset {
        AuditDataset::from_codes(
            &[("sex", &["female", "male"]), ("race", &["white", "nonwhite"])],
            &[vec![0, 0], vec![1, 0], vec![0, 1]],
            vec![true, false, true],
            vec![1, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn counts() {
        let d = ds();
        assert_eq!(enumerate_conjunctions(d.groups()).count(), 8);
        let one = AuditDataset::from_codes(&[("a", &["x", "y", "z"])], &[vec![0]], vec![true], vec![1]).unwrap();
        assert_eq!(enumerate_conjunctions(one.groups()).count(), 3);
    }

    #[test]
    fn lexicographic_order() {
        let d = ds();
        let all: Vec<Vec<usize>> = enumerate_conjunctions(d.groups()).map(|c| c.literals).collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(all[0], vec![0]);
        assert_eq!(all[1], vec![0, 2]);
    }

    #[test]
    fn planted_conjunction_membership_and_text() {
        let d = ds();
        let s: Subgroup = Conjunction::new(vec![2, 0], d.groups()).unwrap().into();
        assert_eq!(membership(&s, &d).unwrap(), [true, false, false]);
        assert_eq!(describe(&s, d.groups()), "sex = female ∧ race = white");
        let back = Subgroup::from_json(&s.to_json(d.groups()), d.groups()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn empty_conjunction_is_everyone() {
        let d = ds();
        let s: Subgroup = Conjunction::default().into();
        assert_eq!(membership(&s, &d).unwrap(), [true; 3]);
        assert_eq!(describe(&s, d.groups()), "⊤ (entire population)");
    }

    #[test]
    fn same_attribute_twice_rejected() {
        let d = ds();
        assert!(matches!(Conjunction::new(vec![0, 1], d.groups()), Err(SubgroupError::RepeatedAttribute(_))));
    }

    #[test]
    fn out_of_range() {
        let d = ds();
        let s: Subgroup = Conjunction { literals: vec![9], n_min: 0 }.into();
        assert!(matches!(membership(&s, &d), Err(SubgroupError::IndexOutOfRange { index: 9, .. })));
    }

    #[test]
    fn linear_threshold() {
        let d = AuditDataset::from_codes(&[("a", &["1", "0"])], &[vec![0], vec![1]], vec![true, false], vec![1, 1]).unwrap();
        let s: Subgroup = LinearThresholdGroup { c: vec![1.0, 0.0], t: 0.5, eps: DEFAULT_EPS }.into();
        assert_eq!(membership(&s, &d).unwrap(), [true, false]);
        let text = describe(&LinearThresholdGroup { c: vec![0.391, -1.0], t: -1.118, eps: 1e-6 }.into(), d.groups());
        assert_eq!(text, "0.39·[a = 1] − 1.00·[a = 0] ≥ −1.12");
    }

    #[test]
    fn conjunction_as_linear() {
        let d = ds();
        for c in enumerate_conjunctions(d.groups()) {
            let lin: Subgroup = c.to_linear(d.width()).into();
            let conj: Subgroup = c.into();
            assert_eq!(membership(&lin, &d).unwrap(), membership(&conj, &d).unwrap());
        }
    }
}
