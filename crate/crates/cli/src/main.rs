//! `fairmio`: audit classifiers for intersectional unfairness, train fair
//! linear or DNF classifiers, and generate synthetic test data.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 time limit hit
//! before any solution, 4 training ended without a fairness proof.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::Settings;
use fairmio::auditor::{
    audit_conjunction_bnb_with, audit_conjunction_milp_with, audit_linear_milp_with, check_gamma_with,
    logistic_warm_start, AuditObjective, CheckOptions, GammaStatus, SubgroupClass, DETECTION_TIME_LIMIT,
    ORACLE_TIME_LIMIT,
};
use fairmio::dataset::{build_dataset, ingest_csv, split, AuditDataset, Schema};
use fairmio::metrics::{Measure, PredictionVector};
use fairmio::milp::{parse_lp, write_solution, SolveStatus, Solver};
use fairmio::subgroups::conjunction_count;
use fairmio::synth::{generate, SynthConfig, SynthError};
use fairmio::trainer::{
    evaluate_predictions, train, Evaluation, ModelKind, ModelSpec, OracleKind, TrainConfig, TrainError,
    TrainStatus, DEFAULT_GAMMA, DEFAULT_MAX_CUTS,
};
use fairmio::Exec;

const EXIT_CONFIG: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_UNPROVEN: u8 = 4;

#[derive(Parser)]
#[command(name = "fairmio", version, about = "Intersectional fairness audits and fair classifier training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Find the subgroup with the largest unfairness.
    Audit,
    /// Decide whether every subgroup is within gamma.
    Check,
    /// Train a classifier under a fairness constraint.
    Train,
    /// Accuracy and worst-case unfairness of a stored model or prediction column.
    Evaluate,
    /// Write a synthetic dataset with a planted biased intersection.
    Synth,
    /// Solve an LP-format model with the built-in solver (usable as an external solver).
    SolveLp { lp_file: PathBuf, solution_file: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// Input CSV.
    #[arg(long, global = true)]
    data: Option<String>,
    /// Column roles; defaults to `<data>.schema`.
    #[arg(long, global = true)]
    schema: Option<String>,
    /// sd, spsf or fpsf.
    #[arg(long, global = true)]
    measure: Option<String>,
    /// conj or linear.
    #[arg(long, global = true)]
    subgroups: Option<String>,
    /// Conjunction search: bnb (combinatorial) or milp.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Fairness threshold (default 0.01).
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// Smallest subgroup weight an audit may return.
    #[arg(long, global = true)]
    n_min: Option<String>,
    /// Seconds for the whole command.
    #[arg(long, global = true)]
    time_limit: Option<String>,
    /// Seconds per master solve during training.
    #[arg(long, global = true)]
    master_time_limit: Option<String>,
    /// Seconds per audit during training (default 300).
    #[arg(long, global = true)]
    oracle_time_limit: Option<String>,
    /// linear or dnf.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Number of DNF clauses.
    #[arg(long, global = true)]
    clauses: Option<String>,
    /// Penalty on nonzero linear coefficients.
    #[arg(long, global = true)]
    sparsity: Option<String>,
    /// Stop training after this many cuts (default 50).
    #[arg(long, global = true)]
    max_cuts: Option<String>,
    /// Violator search during training: same or sd.
    #[arg(long, global = true)]
    oracle: Option<String>,
    /// Seed for synthetic data and the train/test split.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// builtin or external:<path>.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Output path (JSON results, or the CSV for synth); stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Per-iteration CSV of a training run; defaults to `<out>.plot.csv`.
    #[arg(long, global = true)]
    plot: Option<String>,
    /// Model JSON whose predictions are audited.
    #[arg(long, global = true)]
    predictor: Option<String>,
    /// Hold out this fraction of rows as a test set.
    #[arg(long, global = true)]
    test_fraction: Option<String>,
    /// Include wall-clock timings in the output.
    #[arg(long, global = true)]
    timings: bool,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Check SPSF or FPSF through SD with a converted threshold.
    #[arg(long, global = true)]
    via_sd: bool,
    /// Synthetic rows.
    #[arg(long, global = true)]
    n: Option<String>,
    /// SD of the planted intersection between the label classes.
    #[arg(long, global = true)]
    planted_sd: Option<String>,
    /// Extra protected attributes with no effect.
    #[arg(long, global = true)]
    noise_attributes: Option<String>,
    /// Binary non-protected features.
    #[arg(long, global = true)]
    features: Option<String>,
    /// Flip probability of the first feature.
    #[arg(long, global = true)]
    feature_noise: Option<String>,
    /// Chance that a negative row in the planted cell looks positive.
    #[arg(long, global = true)]
    fp_bias: Option<String>,
}

impl Opts {
    fn into_map(self) -> BTreeMap<&'static str, String> {
        let flag = |b: bool| b.then(|| "true".to_string());
        let pairs = [
            ("data", self.data),
            ("schema", self.schema),
            ("measure", self.measure),
            ("subgroups", self.subgroups),
            ("method", self.method),
            ("gamma", self.gamma),
            ("n-min", self.n_min),
            ("time-limit", self.time_limit),
            ("master-time-limit", self.master_time_limit),
            ("oracle-time-limit", self.oracle_time_limit),
            ("model", self.model),
            ("clauses", self.clauses),
            ("sparsity", self.sparsity),
            ("max-cuts", self.max_cuts),
            ("oracle", self.oracle),
            ("seed", self.seed),
            ("solver", self.solver),
            ("out", self.out),
            ("plot", self.plot),
            ("predictor", self.predictor),
            ("test-fraction", self.test_fraction),
            ("timings", flag(self.timings)),
            ("sequential", flag(self.sequential)),
            ("via-sd", flag(self.via_sd)),
            ("n", self.n),
            ("planted-sd", self.planted_sd),
            ("noise-attributes", self.noise_attributes),
            ("features", self.features),
            ("feature-noise", self.feature_noise),
            ("fp-bias", self.fp_bias),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Settings::new(cli.opts.into_map(), cli.config.as_deref()).and_then(|s| match cli.command {
        Command::Audit => cmd_audit(&s),
        Command::Check => cmd_check(&s),
        Command::Train => cmd_train(&s),
        Command::Evaluate => cmd_evaluate(&s),
        Command::Synth => cmd_synth(&s),
        Command::SolveLp { lp_file, solution_file } => cmd_solve_lp(&s, &lp_file, &solution_file),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn sidecar(path: &str, ext: &str) -> String {
    format!("{path}.{ext}")
}

fn exec(s: &Settings) -> Result<Exec> {
    Ok(if s.flag("sequential")? { Exec::Sequential } else { Exec::default() })
}

fn load_dataset(s: &Settings) -> Result<AuditDataset> {
    let data: String = s.require("data")?;
    let schema_path = s.get::<String>("schema")?.unwrap_or_else(|| sidecar(&data, "schema"));
    if !Path::new(&schema_path).exists() {
        bail!("schema file {schema_path} not found (pass --schema)");
    }
    let schema = Schema::from_file(&schema_path).with_context(|| format!("reading schema {schema_path}"))?;
    let raw = ingest_csv(&data, &schema).with_context(|| format!("reading {data}"))?;
    Ok(build_dataset(&raw, &schema.rules)?)
}

fn load_model(path: &str) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {path}"))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing model {path}"))?;
    // Accept either a bare model or a training report that contains one.
    let model = value.get("model").filter(|m| m.get("kind").is_some()).unwrap_or(&value);
    ModelSpec::from_json(model).with_context(|| format!("{path} is not a model"))
}

/// `--predictor` model, else the schema's prediction column, else the labels.
fn predictions(s: &Settings, ds: &AuditDataset) -> Result<(Vec<bool>, String)> {
    if let Some(path) = s.get::<String>("predictor")? {
        let model = load_model(&path)?;
        return Ok((model.predict(ds)?, format!("model {path}")));
    }
    if let Some(p) = ds.predictions() {
        return Ok((p.to_vec(), "prediction column".into()));
    }
    Ok((ds.labels().to_vec(), "labels".into()))
}

fn write_json(s: &Settings, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match s.get::<String>("out")? {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {path}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dataset_json(ds: &AuditDataset) -> Value {
    json!({
        "rows": ds.len(),
        "total_weight": ds.total_weight(),
        "protected_columns": ds.protected_column_names(),
        "features": ds.feature_names(),
        "conjunctions": conjunction_count(ds.groups()).to_string(),
    })
}

fn cmd_audit(s: &Settings) -> Result<u8> {
    let ds = load_dataset(s)?;
    let (yhat, source) = predictions(s, &ds)?;
    let yhat = PredictionVector::new(&ds, yhat)?;
    let kind: Measure = s.or("measure", Measure::SPSF)?;
    let class: SubgroupClass = s.or("subgroups", SubgroupClass::Conjunction)?;
    let solver: Solver = s.or("solver", Solver::Builtin)?;
    let limit = s.get::<f64>("time-limit")?.or(Some(DETECTION_TIME_LIMIT));
    let method = s.or("method", if solver == Solver::Builtin { "bnb".to_string() } else { "milp".to_string() })?;
    let obj = AuditObjective::new(&ds, &yhat, kind)
        .with_context(|| format!("cannot audit {} of these predictions ({source})", kind.name()))?
        .with_n_min(s.or("n-min", 0)?);
    let result = match (class, method.as_str()) {
        (SubgroupClass::Conjunction, "bnb") => audit_conjunction_bnb_with(&ds, &yhat, &obj, limit, exec(s)?)?,
        (SubgroupClass::Conjunction, "milp") => audit_conjunction_milp_with(&ds, &yhat, &obj, limit, &solver)?,
        (SubgroupClass::Linear, _) => {
            let warm = logistic_warm_start(&ds, &yhat.positive_rows(), &yhat.negative_rows()).ok();
            audit_linear_milp_with(&ds, &yhat, &obj, warm.as_ref(), limit, &solver)?
        }
        (_, m) => bail!("--method must be bnb or milp, got `{m}`"),
    };
    write_json(
        s,
        &json!({
            "command": "audit",
            "dataset": dataset_json(&ds),
            "predictions": source,
            "measure": kind.name(),
            "subgroups": class_name(class),
            "result": result.to_json(ds.groups(), s.flag("timings")?),
        }),
    )?;
    Ok(if result.status == SolveStatus::TimeLimit && result.subgroup.is_none() { EXIT_TIMEOUT } else { 0 })
}

fn class_name(c: SubgroupClass) -> &'static str {
    match c {
        SubgroupClass::Conjunction => "conj",
        SubgroupClass::Linear => "linear",
    }
}

fn cmd_check(s: &Settings) -> Result<u8> {
    let ds = load_dataset(s)?;
    let (yhat, source) = predictions(s, &ds)?;
    let yhat = PredictionVector::new(&ds, yhat)?;
    let kind: Measure = s.or("measure", Measure::SPSF)?;
    let class: SubgroupClass = s.or("subgroups", SubgroupClass::Conjunction)?;
    let gamma: f64 = s.or("gamma", DEFAULT_GAMMA)?;
    if !(gamma >= 0.0) {
        bail!("--gamma must be ≥ 0");
    }
    let opts = CheckOptions { via_sd: s.flag("via-sd")?, solver: s.or("solver", Solver::Builtin)?, exec: exec(s)? };
    let limit = s.get::<f64>("time-limit")?.or(Some(DETECTION_TIME_LIMIT));
    let check = check_gamma_with(&ds, &yhat, kind, gamma, class, limit, &opts)?;
    write_json(
        s,
        &json!({
            "command": "check",
            "dataset": dataset_json(&ds),
            "predictions": source,
            "measure": kind.name(),
            "subgroups": class_name(class),
            "gamma": gamma,
            "satisfied": check.satisfied(),
            "check": check.to_json(ds.groups()),
        }),
    )?;
    Ok(if check.status == GammaStatus::Unknown { EXIT_TIMEOUT } else { 0 })
}

/// Train/test views; splitting is done on unit-weight rows so that merged
/// duplicates can land on both sides.
fn split_dataset(s: &Settings, ds: AuditDataset) -> Result<(AuditDataset, Option<AuditDataset>)> {
    match s.get::<f64>("test-fraction")? {
        None => Ok((ds, None)),
        Some(f) => {
            let (train, test) = split(&ds.expand(), f, s.or("seed", 0)?)?;
            Ok((train.aggregate(), Some(test.aggregate())))
        }
    }
}

fn evaluation(ds: &AuditDataset, model: &ModelSpec, e: Exec) -> Result<Evaluation> {
    Ok(evaluate_predictions(ds, &model.predict(ds)?, e)?)
}

fn cmd_train(s: &Settings) -> Result<u8> {
    let ds = load_dataset(s)?;
    let (train_ds, test_ds) = split_dataset(s, ds)?;
    let cfg = TrainConfig {
        model: s.or("model", ModelKind::Linear)?,
        clauses: s.or("clauses", 1)?,
        sparsity: s.or("sparsity", 0.0)?,
        cut_kind: s.or("measure", Measure::FPSF)?,
        oracle_kind: s.or("oracle", OracleKind::SameAsCut)?,
        subgroup_class: s.or("subgroups", SubgroupClass::Conjunction)?,
        gamma: s.or("gamma", DEFAULT_GAMMA)?,
        master_time_limit: s.get("master-time-limit")?,
        oracle_time_limit: Some(s.or("oracle-time-limit", ORACLE_TIME_LIMIT)?),
        time_limit: s.get("time-limit")?,
        max_cuts: s.or("max-cuts", DEFAULT_MAX_CUTS)?,
        solver: s.or("solver", Solver::Builtin)?,
        exec: exec(s)?,
        ..Default::default()
    };
    let result = match train(&train_ds, &cfg) {
        Ok(r) => r,
        Err(TrainError::NoIncumbent) => {
            eprintln!("error: {}", TrainError::NoIncumbent);
            return Ok(EXIT_TIMEOUT);
        }
        Err(e) => return Err(e.into()),
    };
    let train_eval = evaluation(&train_ds, &result.model, cfg.exec)?;
    let test_eval = test_ds.as_ref().map(|t| evaluation(t, &result.model, cfg.exec)).transpose()?;
    let mut report = result.to_json(train_ds.groups(), Some(&train_eval), test_eval.as_ref(), s.flag("timings")?);
    if let Value::Object(m) = &mut report {
        m.insert("command".into(), json!("train"));
        m.insert("dataset".into(), dataset_json(&train_ds));
        m.insert("gamma".into(), json!(cfg.gamma));
        m.insert("measure".into(), json!(cfg.cut_kind.name()));
    }
    write_json(s, &report)?;
    let plot = s.get::<String>("plot")?.or(s.get::<String>("out")?.map(|o| sidecar(&o, "plot.csv")));
    if let Some(path) = plot {
        std::fs::write(&path, result.plot_csv(train_eval.worst(cfg.cut_kind)))
            .with_context(|| format!("writing {path}"))?;
    }
    Ok(if result.status == TrainStatus::FairUnproven { EXIT_UNPROVEN } else { 0 })
}

fn cmd_evaluate(s: &Settings) -> Result<u8> {
    let ds = load_dataset(s)?;
    let (ds, test) = split_dataset(s, ds)?;
    let e = exec(s)?;
    let mut out = json!({ "command": "evaluate", "dataset": dataset_json(&ds) });
    match s.get::<String>("predictor")? {
        Some(path) => {
            let model = load_model(&path)?;
            out["predictions"] = json!(format!("model {path}"));
            out["train"] = evaluation(&ds, &model, e)?.to_json(ds.groups());
            if let Some(t) = &test {
                out["test"] = evaluation(t, &model, e)?.to_json(t.groups());
            }
        }
        None => {
            if test.is_some() {
                bail!("--test-fraction needs --predictor");
            }
            let (yhat, source) = predictions(s, &ds)?;
            out["predictions"] = json!(source);
            out["train"] = evaluate_predictions(&ds, &yhat, e)?.to_json(ds.groups());
        }
    }
    write_json(s, &out)?;
    Ok(0)
}

fn cmd_synth(s: &Settings) -> Result<u8> {
    let out: String = s.require("out")?;
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n: s.or("n", d.n)?,
        planted_sd: s.or("planted-sd", d.planted_sd)?,
        seed: s.or("seed", d.seed)?,
        noise_attributes: s.or("noise-attributes", d.noise_attributes)?,
        features: s.or("features", d.features)?,
        feature_noise: s.or("feature-noise", d.feature_noise)?,
        fp_bias: s.or("fp-bias", d.fp_bias)?,
    };
    let syn = generate(&cfg).map_err(|e| match e {
        SynthError::Infeasible(m) => anyhow!("infeasible synthetic configuration: {m}"),
        e => e.into(),
    })?;
    let (schema, planted) = syn.write(Path::new(&out))?;
    let mut summary = syn.planted_json();
    summary["data"] = json!(out);
    summary["schema"] = json!(schema.display().to_string());
    summary["planted_file"] = json!(planted.display().to_string());
    summary["rows"] = json!(cfg.n);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}

fn cmd_solve_lp(s: &Settings, model: &Path, solution: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let mut m = parse_lp(&text)?;
    m.time_limit = s.get("time-limit")?;
    let sol = Solver::Builtin.solve(&m)?;
    write_solution(&m, &sol, solution)?;
    Ok(if sol.status == SolveStatus::TimeLimit && !sol.has_incumbent() { EXIT_TIMEOUT } else { 0 })
}
