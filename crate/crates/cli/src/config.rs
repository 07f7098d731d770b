//! Option resolution: command line, then `--config` file, then defaults.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Every key accepted on the command line or in a config file.
pub const KEYS: &[&str] = &[
    "data",
    "schema",
    "measure",
    "subgroups",
    "method",
    "gamma",
    "n-min",
    "time-limit",
    "master-time-limit",
    "oracle-time-limit",
    "model",
    "clauses",
    "sparsity",
    "max-cuts",
    "oracle",
    "seed",
    "solver",
    "out",
    "plot",
    "predictor",
    "test-fraction",
    "timings",
    "sequential",
    "via-sd",
    "n",
    "planted-sd",
    "noise-attributes",
    "features",
    "feature-noise",
    "fp-bias",
];

pub struct Settings {
    cli: BTreeMap<&'static str, String>,
    file: HashMap<String, String>,
}

/// Reads `key = value` lines; `#` starts a comment, `_` and `-` are interchangeable in keys.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected `key = value`", ln + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{}`", ln + 1, k.trim());
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    pub fn new(cli: BTreeMap<&'static str, String>, config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                parse_config(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => HashMap::new(),
        };
        Ok(Self { cli, file })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.cli.get(key).or_else(|| self.file.get(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("--{key}: cannot use `{v}`: {e}")))
            .transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| anyhow!("--{key} is required for this command"))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        self.or(key, false)
    }
}
