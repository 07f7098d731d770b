//! Synthetic data with a planted intersectional bias.
//!
//! Two binary protected attributes, `sex ∈ {female, male}` and
//! `race ∈ {white, nonwhite}`, split the rows into four equal cells. The label
//! rate of cell `c` is `0.5 + δ_c` with
//!
//! ```text
//! δ(female, white)    = s
//! δ(male, nonwhite)   = s − 2η
//! δ(female, nonwhite) = δ(male, white) = −(s − η)
//! ```
//!
//! so each single attribute has SD `η` (near parity) while `sex = female ∧
//! race = white` has SD `s` between the label classes, the largest of all
//! conjunctions once `s > η`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{build_dataset, ingest_reader, AuditDataset, DatasetError, Schema};

/// Single-attribute SD left in the data so that the planted cell is the unique maximum.
pub const MARGIN: f64 = 0.005;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    /// SD of the planted conjunction between the label classes, in `[0, 0.5]`.
    pub planted_sd: f64,
    pub seed: u64,
    /// Extra binary protected attributes drawn independently of everything else.
    pub noise_attributes: usize,
    /// Binary non-protected features, each a noisy copy of the label.
    pub features: usize,
    /// Flip probability of the first feature; later ones get noisier.
    pub feature_noise: f64,
    /// Probability that a negative row of the planted cell shows the first
    /// feature as 1, planting false positives for a classifier that trusts it.
    pub fp_bias: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 1000, planted_sd: 0.3, seed: 0, noise_attributes: 0, features: 0, feature_noise: 0.15, fp_bias: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub schema: Schema,
    /// Attribute-value pairs of the planted conjunction.
    pub planted: Vec<(String, String)>,
    pub planted_sd: f64,
}

fn probability(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SynthError::Infeasible(format!("{name} must lie in [0, 1], got {p}")))
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Synthetic, SynthError> {
    let s = cfg.planted_sd;
    if !(0.0..=0.5).contains(&s) {
        return Err(SynthError::Infeasible(format!(
            "planted SD {s} cannot coexist with per-attribute parity; it must lie in [0, 0.5]"
        )));
    }
    if cfg.n < 4 {
        return Err(SynthError::Infeasible("at least 4 rows are needed".into()));
    }
    probability("feature noise", cfg.feature_noise)?;
    probability("false-positive bias", cfg.fp_bias)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Cells in (sex, race) order: (female, white), (female, nonwhite), (male, white), (male, nonwhite).
    let deltas = [s, -(s - MARGIN), -(s - MARGIN), s - 2.0 * MARGIN];
    let mut cells: Vec<(usize, bool)> = Vec::with_capacity(cfg.n);
    for (c, delta) in deltas.iter().enumerate() {
        let size = cfg.n / 4 + usize::from(c < cfg.n % 4);
        let positives = ((size as f64) * (0.5 + delta)).round().clamp(0.0, size as f64) as usize;
        cells.extend((0..size).map(|k| (c, k < positives)));
    }
    cells.shuffle(&mut rng);

    let mut header = vec!["sex".to_string(), "race".to_string()];
    header.extend((0..cfg.noise_attributes).map(|a| format!("attr{}", a + 3)));
    header.extend((0..cfg.features).map(|f| format!("x{}", f + 1)));
    header.push("y".to_string());

    let rows = cells
        .into_iter()
        .map(|(c, y)| {
            let mut row = vec![
                if c < 2 { "female" } else { "male" }.to_string(),
                if c % 2 == 0 { "white" } else { "nonwhite" }.to_string(),
            ];
            for _ in 0..cfg.noise_attributes {
                row.push(if rng.gen_bool(0.5) { "p" } else { "q" }.to_string());
            }
            for f in 0..cfg.features {
                let x = if f == 0 && c == 0 && !y && cfg.fp_bias > 0.0 {
                    rng.gen_bool(cfg.fp_bias)
                } else {
                    let flip = (cfg.feature_noise + 0.1 * f as f64).min(0.5);
                    y ^ rng.gen_bool(flip)
                };
                row.push(u8::from(x).to_string());
            }
            row.push(u8::from(y).to_string());
            row
        })
        .collect();

    let mut schema_text = String::from("column.sex = categorical protected\ncolumn.race = categorical protected\n");
    for a in 0..cfg.noise_attributes {
        let _ = writeln!(schema_text, "column.attr{} = categorical protected", a + 3);
    }
    for f in 0..cfg.features {
        let _ = writeln!(schema_text, "column.x{} = numeric feature", f + 1);
    }
    schema_text.push_str("column.y = categorical label\n");

    Ok(Synthetic {
        header,
        rows,
        schema: Schema::parse(&schema_text)?,
        planted: vec![("sex".into(), "female".into()), ("race".into(), "white".into())],
        planted_sd: s,
    })
}

impl Synthetic {
    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII content")
    }

    pub fn dataset(&self) -> Result<AuditDataset, DatasetError> {
        let raw = ingest_reader(self.csv().as_bytes(), &self.schema)?;
        build_dataset(&raw, &self.schema.rules)
    }

    pub fn planted_json(&self) -> Value {
        let pairs: Vec<Value> = self.planted.iter().map(|(a, v)| json!({"attribute": a, "value": v})).collect();
        json!({
            "planted": pairs,
            "description": self
                .planted
                .iter()
                .map(|(a, v)| format!("{a} = {v}"))
                .collect::<Vec<_>>()
                .join(" ∧ "),
            "planted_sd": self.planted_sd,
            "attribute_sd": MARGIN,
        })
    }

    /// Writes `<out>`, `<out>.schema` and `<out>.planted.json`; returns the
    /// latter two paths.
    pub fn write(&self, out: &Path) -> Result<(PathBuf, PathBuf), SynthError> {
        std::fs::write(out, self.csv())?;
        let schema = sidecar(out, "schema");
        std::fs::write(&schema, self.schema.to_text())?;
        let planted = sidecar(out, "planted.json");
        let text = serde_json::to_string_pretty(&self.planted_json()).expect("JSON value serializes");
        std::fs::write(&planted, text + "\n")?;
        Ok((schema, planted))
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
