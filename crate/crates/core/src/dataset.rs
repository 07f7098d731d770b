//! Tabular ingestion, protected-attribute binarization, duplicate aggregation
//! and deterministic splitting.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const MISSING: &str = "missing";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("data row {0}: label is not binary")]
    NonBinaryLabel(usize),
    #[error("data row {row}, column `{column}`: cannot parse value")]
    ParseFailure { row: usize, column: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("numeric protected column `{0}` has no discretization rule")]
    UnruledNumericProtected(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Protected,
    Feature,
    Label,
    /// Stored classifier output to audit instead of the labels.
    Prediction,
    Ignore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizationRule {
    pub column: String,
    pub cut_points: Vec<f64>,
    pub labels: Vec<String>,
}

impl DiscretizationRule {
    /// Builds a rule with labels `≤a`, `(a,b]`, ..., `>z`.
    pub fn new(column: impl Into<String>, cut_points: Vec<f64>) -> Result<Self, DatasetError> {
        let labels = default_bin_labels(&cut_points);
        Self::with_labels(column, cut_points, labels)
    }

    pub fn with_labels(
        column: impl Into<String>,
        cut_points: Vec<f64>,
        labels: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let column = column.into();
        if cut_points.is_empty() || cut_points.windows(2).any(|w| w[0] >= w[1]) || cut_points.iter().any(|c| !c.is_finite()) {
            return Err(DatasetError::Schema(format!("cut points of `{column}` must be finite and strictly increasing")));
        }
        if labels.len() != cut_points.len() + 1 {
            return Err(DatasetError::Schema(format!("`{column}` needs {} bin labels", cut_points.len() + 1)));
        }
        Ok(Self { column, cut_points, labels })
    }

    /// Bin index: `x ≤ cut[0]` is bin 0, `x > cut[last]` the last bin.
    pub fn bin(&self, x: f64) -> usize {
        self.cut_points.partition_point(|&c| c < x)
    }
}

fn default_bin_labels(cuts: &[f64]) -> Vec<String> {
    let mut out = Vec::with_capacity(cuts.len() + 1);
    if let Some(first) = cuts.first() {
        out.push(format!("≤{first}"));
    }
    for w in cuts.windows(2) {
        out.push(format!("({},{}]", w[0], w[1]));
    }
    if let Some(last) = cuts.last() {
        out.push(format!(">{last}"));
    }
    out
}

/// Column roles and discretization rules, read from a flat `key = value` file:
///
/// ```text
/// column.sex = categorical protected
/// column.age = numeric protected
/// cuts.age = 40
/// labels.age = young, old
/// column.income = numeric feature
/// column.y = categorical label
/// ```
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schema {
    pub columns: Vec<ColumnMeta>,
    pub rules: Vec<DiscretizationRule>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut columns = Vec::new();
        let mut cuts: Vec<(String, Vec<f64>)> = Vec::new();
        let mut labels: HashMap<String, Vec<String>> = HashMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| DatasetError::Schema(format!("line {}: {msg}", ln + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let (prefix, name) = key.split_once('.').ok_or_else(|| bad("key must look like `column.<name>`"))?;
            let name = name.trim().to_string();
            match prefix {
                "column" => {
                    let mut parts = value.split_whitespace();
                    let kind = match parts.next() {
                        Some("categorical") => ColumnKind::Categorical,
                        Some("numeric") => ColumnKind::Numeric,
                        _ => return Err(bad("kind must be `categorical` or `numeric`")),
                    };
                    let role = match parts.next() {
                        Some("protected") => Role::Protected,
                        Some("feature") => Role::Feature,
                        Some("label") => Role::Label,
                        Some("prediction") => Role::Prediction,
                        Some("ignore") => Role::Ignore,
                        _ => return Err(bad("role must be protected, feature, label, prediction or ignore")),
                    };
                    if parts.next().is_some() {
                        return Err(bad("trailing text after role"));
                    }
                    columns.push(ColumnMeta { name, kind, role });
                }
                "cuts" => {
                    let pts = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("cut points must be numbers"))?;
                    cuts.push((name, pts));
                }
                "labels" => {
                    labels.insert(name, value.split(',').map(|s| s.trim().to_string()).collect());
                }
                _ => return Err(bad("unknown key prefix")),
            }
        }
        let mut rules = Vec::new();
        for (name, pts) in cuts {
            rules.push(match labels.remove(&name) {
                Some(l) => DiscretizationRule::with_labels(name, pts, l)?,
                None => DiscretizationRule::new(name, pts)?,
            });
        }
        if let Some(name) = labels.keys().next() {
            return Err(DatasetError::Schema(format!("labels given for `{name}` without cut points")));
        }
        let schema = Schema { columns, rules };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let labels = self.columns.iter().filter(|c| c.role == Role::Label).count();
        if labels != 1 {
            return Err(DatasetError::Schema(format!("exactly one label column required, found {labels}")));
        }
        if self.columns.iter().filter(|c| c.role == Role::Prediction).count() > 1 {
            return Err(DatasetError::Schema("at most one prediction column allowed".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DatasetError::Schema(format!("column `{}` declared twice", c.name)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Categorical => "categorical",
                ColumnKind::Numeric => "numeric",
            };
            let role = match c.role {
                Role::Protected => "protected",
                Role::Feature => "feature",
                Role::Label => "label",
                Role::Prediction => "prediction",
                Role::Ignore => "ignore",
            };
            let _ = writeln!(out, "column.{} = {kind} {role}", c.name);
        }
        for r in &self.rules {
            let pts: Vec<String> = r.cut_points.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "cuts.{} = {}", r.column, pts.join(", "));
            let _ = writeln!(out, "labels.{} = {}", r.column, r.labels.join(", "));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Missing,
}

/// Parsed CSV restricted to the schema's columns (in schema order).
#[derive(Clone, Debug)]
pub struct RawTable {
    pub columns: Vec<ColumnMeta>,
    pub rows: Vec<Vec<Cell>>,
}

fn parse_binary(s: &str) -> Option<bool> {
    match s.trim() {
        "0" | "0.0" | "false" | "False" | "FALSE" => Some(false),
        "1" | "1.0" | "true" | "True" | "TRUE" => Some(true),
        _ => None,
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable, DatasetError> {
    let file = fs::File::open(path)?;
    ingest_reader(file, schema)
}

pub fn ingest_reader(reader: impl std::io::Read, schema: &Schema) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for c in &schema.columns {
        let pos = header
            .iter()
            .position(|h| *h == c.name)
            .ok_or_else(|| DatasetError::MissingColumn(c.name.clone()))?;
        positions.push(pos);
    }
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(positions.len());
        for (c, &pos) in schema.columns.iter().zip(&positions) {
            let raw = record.get(pos).unwrap_or("");
            let cell = match (c.role, c.kind) {
                (Role::Label, _) => match parse_binary(raw) {
                    Some(b) => Cell::Num(if b { 1.0 } else { 0.0 }),
                    None => return Err(DatasetError::NonBinaryLabel(r)),
                },
                (Role::Prediction, _) => match parse_binary(raw) {
                    Some(b) => Cell::Num(if b { 1.0 } else { 0.0 }),
                    None => return Err(DatasetError::ParseFailure { row: r, column: c.name.clone() }),
                },
                _ if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw == "?" => Cell::Missing,
                (_, ColumnKind::Numeric) => match raw.parse::<f64>() {
                    Ok(x) if x.is_finite() => Cell::Num(x),
                    _ => return Err(DatasetError::ParseFailure { row: r, column: c.name.clone() }),
                },
                (_, ColumnKind::Categorical) => Cell::Text(raw.to_string()),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(RawTable { columns: schema.columns.clone(), rows })
}

/// One protected attribute and the contiguous block of one-hot columns it owns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeGroup {
    pub name: String,
    pub values: Vec<String>,
    pub start: usize,
}

impl AttributeGroup {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.values.len()
    }
}

/// Weighted, binarized view of a table. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditDataset {
    groups: Vec<AttributeGroup>,
    protected: Vec<Vec<u8>>,
    codes: Vec<Vec<u32>>,
    features: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    labels: Vec<bool>,
    weights: Vec<u64>,
    predictions: Option<Vec<bool>>,
}

impl AuditDataset {
    /// Validates and assembles a dataset from already-binarized parts.
    pub fn new(
        groups: Vec<AttributeGroup>,
        protected: Vec<Vec<u8>>,
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        labels: Vec<bool>,
        weights: Vec<u64>,
    ) -> Result<Self, DatasetError> {
        let n = labels.len();
        if n == 0 {
            return Err(DatasetError::EmptyDataset);
        }
        if protected.len() != n || features.len() != n || weights.len() != n {
            return Err(DatasetError::Invalid("row counts disagree".into()));
        }
        let mut m = 0;
        for g in &groups {
            if g.start != m || g.values.is_empty() {
                return Err(DatasetError::Invalid(format!("attribute `{}` has a bad column range", g.name)));
            }
            m += g.len();
        }
        let d = feature_names.len();
        let mut codes = Vec::with_capacity(n);
        for i in 0..n {
            if protected[i].len() != m {
                return Err(DatasetError::Invalid(format!("row {i} has {} protected bits, expected {m}", protected[i].len())));
            }
            if features[i].len() != d {
                return Err(DatasetError::Invalid(format!("row {i} has {} features, expected {d}", features[i].len())));
            }
            if features[i].iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(DatasetError::Invalid(format!("row {i} has a feature outside [0,1]")));
            }
            if weights[i] == 0 {
                return Err(DatasetError::Invalid(format!("row {i} has zero weight")));
            }
            let mut row_codes = Vec::with_capacity(groups.len());
            for g in &groups {
                let bits = &protected[i][g.range()];
                if bits.iter().any(|&b| b > 1) || bits.iter().filter(|&&b| b == 1).count() != 1 {
                    return Err(DatasetError::Invalid(format!("row {i} is not one-hot in `{}`", g.name)));
                }
                row_codes.push(bits.iter().position(|&b| b == 1).unwrap_or(0) as u32);
            }
            codes.push(row_codes);
        }
        Ok(Self { groups, protected, codes, features, feature_names, labels, weights, predictions: None })
    }

    /// Builds a dataset from per-row attribute value indices. Features are the
    /// protected one-hot columns themselves.
    pub fn from_codes(
        attributes: &[(&str, &[&str])],
        codes: &[Vec<usize>],
        labels: Vec<bool>,
        weights: Vec<u64>,
    ) -> Result<Self, DatasetError> {
        let groups = make_groups(attributes);
        let m: usize = groups.iter().map(AttributeGroup::len).sum();
        let mut protected = Vec::with_capacity(codes.len());
        for (i, row) in codes.iter().enumerate() {
            if row.len() != groups.len() {
                return Err(DatasetError::Invalid(format!("row {i} has {} codes", row.len())));
            }
            let mut bits = vec![0u8; m];
            for (g, &c) in groups.iter().zip(row) {
                if c >= g.len() {
                    return Err(DatasetError::Invalid(format!("row {i}: value index {c} out of range for `{}`", g.name)));
                }
                bits[g.start + c] = 1;
            }
            protected.push(bits);
        }
        let features = protected.iter().map(|r| r.iter().map(|&b| f64::from(b)).collect()).collect();
        let names = column_names(&groups);
        Self::new(groups, protected, features, names, labels, weights)
    }

    pub fn with_predictions(mut self, predictions: Vec<bool>) -> Result<Self, DatasetError> {
        if predictions.len() != self.len() {
            return Err(DatasetError::Invalid("prediction column length mismatch".into()));
        }
        self.predictions = Some(predictions);
        Ok(self)
    }

    /// Replaces the feature matrix (entries must lie in [0,1]).
    pub fn with_features(self, names: Vec<String>, features: Vec<Vec<f64>>) -> Result<Self, DatasetError> {
        let predictions = self.predictions.clone();
        let mut ds = Self::new(self.groups, self.protected, features, names, self.labels, self.weights)?;
        ds.predictions = predictions;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    /// Number of protected one-hot columns.
    pub fn width(&self) -> usize {
        self.groups.iter().map(AttributeGroup::len).sum()
    }

    pub fn protected(&self) -> &[Vec<u8>] {
        &self.protected
    }

    pub fn protected_row(&self, i: usize) -> &[u8] {
        &self.protected[i]
    }

    /// Value index of attribute `a` in row `i`.
    pub fn code(&self, i: usize, a: usize) -> usize {
        self.codes[i][a] as usize
    }

    pub fn codes(&self, i: usize) -> &[u32] {
        &self.codes[i]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn predictions(&self) -> Option<&[bool]> {
        self.predictions.as_deref()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// Weighted class counts `(N₀, N₁)`.
    pub fn class_counts(&self) -> (u64, u64) {
        let mut c = (0, 0);
        for (&y, &w) in self.labels.iter().zip(&self.weights) {
            if y {
                c.1 += w;
            } else {
                c.0 += w;
            }
        }
        c
    }

    /// Display names of the protected one-hot columns, e.g. `sex=female`.
    pub fn protected_column_names(&self) -> Vec<String> {
        column_names(&self.groups)
    }

    pub fn rows_with_label(&self, label: bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Rows `idx` (in the given order) as a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Result<Self, DatasetError> {
        let pick = |v: &[bool]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let mut ds = Self::new(
            self.groups.clone(),
            idx.iter().map(|&i| self.protected[i].clone()).collect(),
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            self.feature_names.clone(),
            pick(&self.labels),
            idx.iter().map(|&i| self.weights[i]).collect(),
        )?;
        ds.predictions = self.predictions.as_deref().map(pick);
        Ok(ds)
    }

    /// Sub-dataset of rows with the given label.
    pub fn stratum(&self, label: bool) -> Result<Self, DatasetError> {
        self.subset(&self.rows_with_label(label))
    }

    /// Merges rows with identical binarized content, summing weights; keeps
    /// first-occurrence order.
    pub fn aggregate(&self) -> Self {
        type RowKey = (Vec<u8>, Vec<u64>, bool, Option<bool>);
        let mut index: HashMap<RowKey, usize> = HashMap::new();
        let mut keep: Vec<usize> = Vec::new();
        let mut weights: Vec<u64> = Vec::new();
        for i in 0..self.len() {
            let key = (
                self.protected[i].clone(),
                self.features[i].iter().map(|x| x.to_bits()).collect(),
                self.labels[i],
                self.predictions.as_ref().map(|p| p[i]),
            );
            match index.get(&key) {
                Some(&k) => weights[k] += self.weights[i],
                None => {
                    index.insert(key, keep.len());
                    keep.push(i);
                    weights.push(self.weights[i]);
                }
            }
        }
        let mut ds = self.subset(&keep).expect("subset of a valid dataset");
        ds.weights = weights;
        ds
    }

    /// Repeats every weighted row `weight` times with unit weight.
    pub fn expand(&self) -> Self {
        let idx: Vec<usize> = (0..self.len()).flat_map(|i| std::iter::repeat_n(i, self.weights[i] as usize)).collect();
        let mut ds = self.subset(&idx).expect("subset of a valid dataset");
        ds.weights = vec![1; idx.len()];
        ds
    }

    /// Deterministic line-oriented text dump: `weight<TAB>bits<TAB>features<TAB>label[<TAB>prediction]`.
    pub fn dump(&self) -> String {
        let mut out = String::from("# fairmio dataset dump v1\n");
        for g in &self.groups {
            let _ = writeln!(out, "# attribute {}: {}", g.name, g.values.join("|"));
        }
        let _ = writeln!(out, "# features: {}", self.feature_names.join("|"));
        for i in 0..self.len() {
            let bits: String = self.protected[i].iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
            let feats: Vec<String> = self.features[i].iter().map(|x| format!("{x:?}")).collect();
            let _ = write!(out, "{}\t{bits}\t{}\t{}", self.weights[i], feats.join(","), u8::from(self.labels[i]));
            if let Some(p) = &self.predictions {
                let _ = write!(out, "\t{}", u8::from(p[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, DatasetError> {
        let bad = |ln: usize, msg: &str| DatasetError::Invalid(format!("dump line {}: {msg}", ln + 1));
        let mut attrs: Vec<(String, Vec<String>)> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let (mut protected, mut features, mut labels, mut weights, mut preds) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (ln, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# attribute ") {
                let (name, vals) = rest.split_once(": ").ok_or_else(|| bad(ln, "bad attribute header"))?;
                attrs.push((name.to_string(), vals.split('|').map(str::to_string).collect()));
                continue;
            }
            if let Some(rest) = line.strip_prefix("# features: ") {
                names = if rest.is_empty() { Vec::new() } else { rest.split('|').map(str::to_string).collect() };
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 && parts.len() != 5 {
                return Err(bad(ln, "expected 4 or 5 tab-separated fields"));
            }
            weights.push(parts[0].parse().map_err(|_| bad(ln, "bad weight"))?);
            protected.push(parts[1].bytes().map(|b| u8::from(b == b'1')).collect());
            features.push(if parts[2].is_empty() {
                Vec::new()
            } else {
                parts[2].split(',').map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad(ln, "bad feature"))?
            });
            labels.push(parse_binary(parts[3]).ok_or_else(|| bad(ln, "bad label"))?);
            if let Some(p) = parts.get(4) {
                preds.push(parse_binary(p).ok_or_else(|| bad(ln, "bad prediction"))?);
            }
        }
        let refs: Vec<(&str, Vec<&str>)> =
            attrs.iter().map(|(n, v)| (n.as_str(), v.iter().map(String::as_str).collect())).collect();
        let groups = make_groups(&refs.iter().map(|(n, v)| (*n, v.as_slice())).collect::<Vec<_>>());
        let ds = Self::new(groups, protected, features, names, labels, weights)?;
        if preds.is_empty() {
            Ok(ds)
        } else {
            ds.with_predictions(preds)
        }
    }
}

fn make_groups(attributes: &[(&str, &[&str])]) -> Vec<AttributeGroup> {
    let mut start = 0;
    attributes
        .iter()
        .map(|(name, values)| {
            let g = AttributeGroup {
                name: name.to_string(),
                values: values.iter().map(|v| v.to_string()).collect(),
                start,
            };
            start += values.len();
            g
        })
        .collect()
}

fn column_names(groups: &[AttributeGroup]) -> Vec<String> {
    groups
        .iter()
        .flat_map(|g| g.values.iter().map(move |v| column_label(&g.name, v)))
        .collect()
}

/// `age≤40` for bin labels starting with a comparison or bracket, `sex=female` otherwise.
fn column_label(attr: &str, value: &str) -> String {
    if value.starts_with(['≤', '<', '>', '≥', '(', '[']) {
        format!("{attr}{value}")
    } else {
        format!("{attr}={value}")
    }
}

/// Binarizes protected attributes, scales features and merges duplicates.
pub fn build_dataset(raw: &RawTable, rules: &[DiscretizationRule]) -> Result<AuditDataset, DatasetError> {
    if raw.rows.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let n = raw.rows.len();
    let mut groups: Vec<AttributeGroup> = Vec::new();
    let mut prot_codes: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut feat_cols: Vec<(String, Vec<f64>)> = Vec::new();
    let mut labels = vec![false; n];
    let mut preds: Option<Vec<bool>> = None;

    for (c, meta) in raw.columns.iter().enumerate() {
        let cells = raw.rows.iter().map(|r| &r[c]);
        match meta.role {
            Role::Ignore => {}
            Role::Label => {
                for (i, cell) in cells.enumerate() {
                    labels[i] = matches!(cell, Cell::Num(x) if *x == 1.0);
                }
            }
            Role::Prediction => {
                preds = Some(cells.map(|cell| matches!(cell, Cell::Num(x) if *x == 1.0)).collect());
            }
            Role::Protected => {
                let (values, codes) = match meta.kind {
                    ColumnKind::Categorical => categorical_codes(cells),
                    ColumnKind::Numeric => {
                        let rule = rules
                            .iter()
                            .find(|r| r.column == meta.name)
                            .ok_or_else(|| DatasetError::UnruledNumericProtected(meta.name.clone()))?;
                        binned_codes(cells, rule)
                    }
                };
                for (i, code) in codes.into_iter().enumerate() {
                    prot_codes[i].push(code);
                }
                let start = groups.iter().map(AttributeGroup::len).sum();
                groups.push(AttributeGroup { name: meta.name.clone(), values, start });
            }
            Role::Feature => match meta.kind {
                ColumnKind::Numeric => {
                    let mut xs = Vec::with_capacity(n);
                    for (i, cell) in cells.enumerate() {
                        match cell {
                            Cell::Num(x) => xs.push(*x),
                            _ => return Err(DatasetError::ParseFailure { row: i, column: meta.name.clone() }),
                        }
                    }
                    feat_cols.push((meta.name.clone(), min_max_scale(&xs)));
                }
                ColumnKind::Categorical => {
                    let (values, codes) = categorical_codes(cells);
                    for (k, v) in values.iter().enumerate() {
                        feat_cols.push((column_label(&meta.name, v), codes.iter().map(|&c| f64::from(u8::from(c == k))).collect()));
                    }
                }
            },
        }
    }

    let m: usize = groups.iter().map(AttributeGroup::len).sum();
    let mut protected = Vec::with_capacity(n);
    for codes in &prot_codes {
        let mut bits = vec![0u8; m];
        for (g, &c) in groups.iter().zip(codes) {
            bits[g.start + c] = 1;
        }
        protected.push(bits);
    }
    // Protected one-hots lead the feature matrix so trained models see the full sample.
    let mut names = column_names(&groups);
    names.extend(feat_cols.iter().map(|(n, _)| n.clone()));
    let features: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = protected[i].iter().map(|&b| f64::from(b)).collect();
            row.extend(feat_cols.iter().map(|(_, col)| col[i]));
            row
        })
        .collect();
    let mut ds = AuditDataset::new(groups, protected, features, names, labels, vec![1; n])?;
    ds.predictions = preds;
    Ok(ds.aggregate())
}

fn categorical_codes<'a>(cells: impl Iterator<Item = &'a Cell>) -> (Vec<String>, Vec<usize>) {
    let texts: Vec<String> = cells
        .map(|c| match c {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => x.to_string(),
            Cell::Missing => MISSING.to_string(),
        })
        .collect();
    let values: Vec<String> = texts.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let codes = texts.iter().map(|t| values.binary_search(t).expect("value collected above")).collect();
    (values, codes)
}

fn binned_codes<'a>(cells: impl Iterator<Item = &'a Cell>, rule: &DiscretizationRule) -> (Vec<String>, Vec<usize>) {
    let mut values = rule.labels.clone();
    let missing_code = values.len();
    let mut any_missing = false;
    let codes = cells
        .map(|c| match c {
            Cell::Num(x) => rule.bin(*x),
            Cell::Text(s) => match s.parse::<f64>() {
                Ok(x) => rule.bin(x),
                Err(_) => {
                    any_missing = true;
                    missing_code
                }
            },
            Cell::Missing => {
                any_missing = true;
                missing_code
            }
        })
        .collect();
    if any_missing {
        values.push(MISSING.to_string());
    }
    (values, codes)
}

fn min_max_scale(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|&x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

/// Splits into `(train, test)` with `floor(test_fraction·n)` test rows,
/// clamped so each side keeps at least one row.
pub fn split(ds: &AuditDataset, test_fraction: f64, seed: u64) -> Result<(AuditDataset, AuditDataset), DatasetError> {
    let n = ds.len();
    if n < 2 {
        return Err(DatasetError::EmptyDataset);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::Invalid("test fraction must lie in (0,1)".into()));
    }
    let k = ((test_fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}
