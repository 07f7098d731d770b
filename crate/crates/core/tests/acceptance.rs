//! Acceptance suite: each criterion prints one PASS/FAIL line; any failure
//! makes the binary exit nonzero.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{all_conjunctions, brute_max, enumerate_milp, fpsf_oracle, prob, random_cards, random_dataset, random_milp, random_predictions, rng, sd_oracle, spsf_oracle};
use fairmio::auditor::{
    audit_conjunction_bnb, audit_conjunction_milp, audit_linear_milp, check_gamma_with, AuditObjective, CheckOptions,
    GammaStatus, SubgroupClass,
};
use fairmio::dataset::AuditDataset;
use fairmio::metrics::{enumerate_argmax, Measure, PredictionVector, SignedWeights};
use fairmio::milp::lp_format::{parse_lp, to_lp_string};
use fairmio::milp::{Solver, SolveStatus};
use fairmio::subgroups::{describe, membership, Subgroup};
use fairmio::synth::{generate, SynthConfig};
use fairmio::trainer::{build_master_dnf, train, ModelKind, ModelSpec, TrainConfig, TrainStatus};
use fairmio::Exec;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget_s: u64) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t <= Duration::from_secs(budget_s), || format!("took {t:.2?}, budget {budget_s} s"))?;
    Ok(t)
}

fn members_of(ds: &AuditDataset, s: &Subgroup) -> Vec<bool> {
    membership(s, ds).unwrap()
}

/// At least two rows of each label, so predictions can vary among negatives.
fn dataset_with_both_labels(r: &mut impl Rng, cards: &[usize], n: usize) -> AuditDataset {
    loop {
        let ds = random_dataset(r, cards, n, 5);
        if ds.rows_with_label(false).len() >= 2 && ds.rows_with_label(true).len() >= 2 {
            return ds;
        }
    }
}

/// Instances with at most `max_attrs` binary attributes and non-degenerate predictions.
fn binary_family(seed: u64, count: usize, max_attrs: usize, max_n: usize) -> Vec<(AuditDataset, PredictionVector)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let cards = vec![2; r.gen_range(1..=max_attrs)];
            let n = r.gen_range(4..=max_n);
            let ds = dataset_with_both_labels(&mut r, &cards, n);
            let yhat = random_predictions(&mut r, &ds, 0.2);
            (ds, yhat)
        })
        .collect()
}

fn mixed_family(seed: u64, count: usize, max_cols: usize, max_n: usize) -> Vec<(AuditDataset, PredictionVector)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let cards = random_cards(&mut r, 4, 4, max_cols);
            let n = r.gen_range(10..=max_n);
            let ds = dataset_with_both_labels(&mut r, &cards, n);
            let bias = r.gen_range(0.0..0.4);
            let yhat = random_predictions(&mut r, &ds, bias);
            (ds, yhat)
        })
        .collect()
}

fn spsf_sd_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut subgroups = 0;
    for (ds, yhat) in binary_family(1, 1000, 4, 50) {
        let y = yhat.values();
        let spsf = SignedWeights::spsf(&ds, &yhat);
        let sd = SignedWeights::sd_conditional(&ds, &yhat).map_err(|e| e.to_string())?;
        let p_h = prob(&ds, &(0..ds.len()).collect::<Vec<_>>(), y);
        for (_, m) in all_conjunctions(&ds) {
            let lib_spsf = spsf.to_real(spsf.sum(&m)).abs();
            let lib_sd = sd.to_real(sd.sum(&m)).abs();
            worst = worst.max((lib_spsf - lib_sd * p_h * (1.0 - p_h)).abs());
            worst = worst.max((lib_spsf - spsf_oracle(&ds, y, &m)).abs());
            worst = worst.max((lib_sd - sd_oracle(&ds, y, &m)).abs());
            subgroups += 1;
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    let t = within(start, 30)?;
    Ok(format!("1000 datasets, {subgroups} subgroups, max deviation {worst:.1e}, {t:.2?}"))
}

fn argmax_sets_agree() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for (k, (ds, yhat)) in mixed_family(2, 200, 10, 60).into_iter().enumerate() {
        let spsf = SignedWeights::spsf(&ds, &yhat);
        let sd = SignedWeights::sd_conditional(&ds, &yhat).map_err(|e| e.to_string())?;
        let sets = |sw: &SignedWeights| -> Result<BTreeSet<Vec<bool>>, String> {
            let e = enumerate_argmax(&ds, sw, u128::MAX, Exec::default()).map_err(|e| e.to_string())?;
            Ok(e.argmax.into_iter().map(|c| members_of(&ds, &Subgroup::from(c))).collect())
        };
        let a = sets(&spsf)?;
        let b = sets(&sd)?;
        ensure(a == b, || format!("instance {k}: argmax sets differ ({} vs {})", a.len(), b.len()))?;
        let (_, oracle) = brute_max(&ds, |m| sd_oracle(&ds, yhat.values(), m), 1e-12);
        let oracle: BTreeSet<Vec<bool>> = oracle.into_iter().collect();
        ensure(a == oracle, || format!("instance {k}: argmax set differs from brute force"))?;
        total += a.len();
    }
    let t = within(start, 60)?;
    Ok(format!("200 instances, {total} maximizers in total, {t:.2?}"))
}

fn fpsf_stratum_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (ds, yhat) in binary_family(1, 1000, 4, 50) {
        let d0 = ds.rows_with_label(false);
        let stratum = ds.subset(&d0).map_err(|e| e.to_string())?;
        let y0 = yhat.restrict(&stratum, &d0).map_err(|e| e.to_string())?;
        let fpsf = SignedWeights::fpsf(&ds, &yhat).map_err(|e| e.to_string())?;
        let spsf0 = SignedWeights::spsf(&stratum, &y0);
        let p_y0 = ds.class_counts().0 as f64 / ds.total_weight() as f64;
        for (c, m) in all_conjunctions(&ds) {
            let m0: Vec<bool> = stratum.protected().iter().map(|b| c.contains_row(b)).collect();
            let lhs = fpsf.to_real(fpsf.sum(&m)).abs();
            let rhs = p_y0 * spsf0.to_real(spsf0.sum(&m0)).abs();
            worst = worst.max((lhs - rhs).abs()).max((lhs - fpsf_oracle(&ds, yhat.values(), &m)).abs());
            checked += 1;
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("{checked} subgroups, max deviation {worst:.1e}"))
}

fn auditors_are_exact() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let kinds = [Measure::SD, Measure::SPSF, Measure::FPSF];
    for k in 0..200 {
        let cards = random_cards(&mut r, 4, 4, 12);
        let n = r.gen_range(20..=500);
        let ds = dataset_with_both_labels(&mut r, &cards, n);
        let bias = r.gen_range(0.0..0.4);
        let yhat = random_predictions(&mut r, &ds, bias);
        let kind = kinds[k % 3];
        let sw = SignedWeights::for_measure(kind, &ds, &yhat).map_err(|e| e.to_string())?;
        let e = enumerate_argmax(&ds, &sw, u128::MAX, Exec::default()).map_err(|e| e.to_string())?;
        let argmax: BTreeSet<Vec<bool>> = e.argmax.iter().map(|c| members_of(&ds, &Subgroup::from(c.clone()))).collect();
        let y = yhat.values();
        let (brute, _) = brute_max(&ds, |m| match kind {
            Measure::SD => sd_oracle(&ds, y, m),
            Measure::SPSF => spsf_oracle(&ds, y, m),
            Measure::FPSF => fpsf_oracle(&ds, y, m),
        }, 0.0);
        ensure((brute - e.value).abs() <= 1e-10, || format!("instance {k}: enumeration {} vs definition {brute}", e.value))?;
        let obj = AuditObjective::new(&ds, &yhat, kind).map_err(|e| e.to_string())?;
        let bnb = audit_conjunction_bnb(&ds, &yhat, &obj, None).map_err(|e| e.to_string())?;
        let milp = audit_conjunction_milp(&ds, &yhat, &obj, None).map_err(|e| e.to_string())?;
        for (name, res) in [("bnb", &bnb), ("milp", &milp)] {
            ensure(res.status == SolveStatus::Optimal, || format!("instance {k}: {name} status {:?}", res.status))?;
            ensure((res.objective_value - e.value).abs() <= 1e-7, || {
                format!("instance {k} ({kind:?}): {name} {} vs enumeration {}", res.objective_value, e.value)
            })?;
            let s = res.subgroup.as_ref().ok_or(format!("instance {k}: {name} returned no subgroup"))?;
            ensure(argmax.contains(&members_of(&ds, s)), || format!("instance {k}: {name} subgroup is not a maximizer"))?;
        }
    }
    let t = within(start, 300)?;
    Ok(format!("200 instances (SD, SPSF, FPSF in rotation), {t:.2?}"))
}

fn linear_contains_conjunctions() -> Outcome {
    let mut compared = 0;
    let mut worst = f64::INFINITY;
    for (k, (ds, yhat)) in mixed_family(5, 60, 8, 80).into_iter().enumerate() {
        let kind = [Measure::SD, Measure::SPSF, Measure::FPSF][k % 3];
        let obj = AuditObjective::new(&ds, &yhat, kind).map_err(|e| e.to_string())?;
        let conj = audit_conjunction_bnb(&ds, &yhat, &obj, None).map_err(|e| e.to_string())?;
        let lin = audit_linear_milp(&ds, &yhat, &obj, None, Some(30.0)).map_err(|e| e.to_string())?;
        if conj.status == SolveStatus::Optimal && lin.status == SolveStatus::Optimal {
            let margin = lin.objective_value - conj.objective_value;
            ensure(margin >= -1e-7, || format!("instance {k}: linear {} < conjunction {}", lin.objective_value, conj.objective_value))?;
            worst = worst.min(margin);
            compared += 1;
        }
    }
    ensure(compared > 0, || "no instance finished optimally in both classes".into())?;
    Ok(format!("{compared}/60 instances proven in both classes, smallest margin {worst:.2e}"))
}

/// Synthetic fixtures with a planted cell whose negatives tend to look positive.
fn planted_fixtures() -> Vec<AuditDataset> {
    (0..20)
        .map(|seed| {
            let cfg = SynthConfig { n: 400, planted_sd: 0.2, seed, features: 3, fp_bias: 0.8, ..Default::default() };
            generate(&cfg).unwrap().dataset().unwrap()
        })
        .collect()
}

fn worst_fpsf(ds: &AuditDataset, yhat: &[bool]) -> f64 {
    brute_max(ds, |m| fpsf_oracle(ds, yhat, m), 0.0).0
}

struct TrainingRun {
    fair_be: f64,
    free_be: f64,
    fair_fpsf: f64,
    free_fpsf: f64,
}

fn training_runs() -> Result<(Vec<TrainingRun>, String), String> {
    let start = Instant::now();
    let gamma = 0.01;
    let mut runs = Vec::new();
    let mut max_cuts = 0;
    for (k, ds) in planted_fixtures().iter().enumerate() {
        ensure(ds.width() <= 8 && ds.feature_names().len() <= 12, || format!("fixture {k} too wide"))?;
        let cfg = TrainConfig { gamma, ..Default::default() };
        let fair = train(ds, &cfg).map_err(|e| format!("fixture {k}: {e}"))?;
        ensure(fair.status == TrainStatus::FairOptimal, || format!("fixture {k}: status {}", fair.status.name()))?;
        ensure(fair.cuts.len() <= 50, || format!("fixture {k}: {} cuts", fair.cuts.len()))?;
        let fair_fpsf = worst_fpsf(ds, &fair.predictions);
        ensure(fair_fpsf <= gamma + 1e-7, || format!("fixture {k}: max FPSF {fair_fpsf} after training"))?;
        max_cuts = max_cuts.max(fair.cuts.len());
        let free = train(ds, &TrainConfig { gamma: 1.0, ..Default::default() }).map_err(|e| format!("fixture {k}: {e}"))?;
        runs.push(TrainingRun {
            fair_be: fair.balanced_error,
            free_be: free.balanced_error,
            fair_fpsf,
            free_fpsf: worst_fpsf(ds, &free.predictions),
        });
    }
    let t = within(start, 600)?;
    Ok((runs, format!("at most {max_cuts} cuts, {t:.2?}")))
}

fn training_keeps_gamma(runs: &Result<(Vec<TrainingRun>, String), String>) -> Outcome {
    let (runs, note) = runs.as_ref().map_err(Clone::clone)?;
    let worst = runs.iter().map(|r| r.fair_fpsf).fold(0.0, f64::max);
    Ok(format!("{} fixtures FairOptimal, max FPSF {worst:.5}, {note}", runs.len()))
}

fn tradeoff_direction(runs: &Result<(Vec<TrainingRun>, String), String>) -> Outcome {
    let (runs, _) = runs.as_ref().map_err(|_| "training runs failed".to_string())?;
    for (k, r) in runs.iter().enumerate() {
        ensure(r.fair_be >= r.free_be - 1e-12, || format!("fixture {k}: fair BE {} < free BE {}", r.fair_be, r.free_be))?;
        ensure(r.free_fpsf > r.fair_fpsf, || format!("fixture {k}: free FPSF {} not above fair {}", r.free_fpsf, r.fair_fpsf))?;
    }
    let gap: f64 = runs.iter().map(|r| r.fair_be - r.free_be).sum::<f64>() / runs.len() as f64;
    Ok(format!("{} fixtures, mean BE cost {gap:.4}, FPSF strictly reduced on all", runs.len()))
}

fn sd_proxy_agrees() -> Outcome {
    let mut r = rng(8);
    let fixtures = planted_fixtures();
    let (mut violated, mut satisfied) = (0, 0);
    for k in 0..50 {
        let ds = &fixtures[k % fixtures.len()];
        let bias = r.gen_range(0.0..0.3);
        let yhat = random_predictions(&mut r, ds, bias);
        let truth = worst_fpsf(ds, yhat.values());
        let gamma = truth * [0.5, 0.9, 1.1, 2.0][k % 4];
        let check = |via_sd: bool| {
            let opts = CheckOptions { via_sd, ..Default::default() };
            check_gamma_with(ds, &yhat, Measure::FPSF, gamma, SubgroupClass::Conjunction, None, &opts)
        };
        let direct = check(false).map_err(|e| e.to_string())?;
        let proxy = check(true).map_err(|e| e.to_string())?;
        ensure(direct.status != GammaStatus::Unknown && proxy.status != GammaStatus::Unknown, || format!("incumbent {k}: unproven"))?;
        ensure(direct.status == proxy.status, || format!("incumbent {k}: FPSF {:?} vs SD proxy {:?}", direct.status, proxy.status))?;
        let expected = if truth > gamma { GammaStatus::Violated } else { GammaStatus::Satisfied };
        ensure(direct.status == expected, || format!("incumbent {k}: {:?} but enumeration says {expected:?}", direct.status))?;
        if direct.status == GammaStatus::Violated {
            violated += 1;
        } else {
            satisfied += 1;
        }
    }
    Ok(format!("50 incumbents agree ({violated} violated, {satisfied} satisfied)"))
}

fn dnf_single_clause_is_best_conjunction() -> Outcome {
    let mut r = rng(9);
    for k in 0..30 {
        let d = r.gen_range(3..=10);
        let n = r.gen_range(40..=200);
        let member: Vec<usize> = (0..n).map(|_| r.gen_range(0..2)).collect();
        let features: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect()).collect();
        // Labels follow a hidden conjunction with noise.
        let hidden: Vec<usize> = (0..d).filter(|_| r.gen_bool(0.3)).collect();
        let mut labels: Vec<bool> =
            features.iter().map(|x| hidden.iter().all(|&j| x[j] == 1.0) ^ r.gen_bool(0.15)).collect();
        labels[0] = true;
        labels[1] = false;
        let codes: Vec<Vec<usize>> = member.iter().map(|&m| vec![m]).collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        let ds = AuditDataset::from_codes(&[("g", &["a", "b"])], &codes, labels, vec![1; n])
            .and_then(|ds| ds.with_features(names, features))
            .map_err(|e| e.to_string())?;
        let (n0, n1) = ds.class_counts();
        let best = (0..1u32 << d)
            .map(|mask| {
                let (mut fp, mut fn_) = (0u64, 0u64);
                for (x, &y) in ds.features().iter().zip(ds.labels()) {
                    let h = (0..d).all(|j| mask & (1 << j) == 0 || x[j] == 1.0);
                    fp += u64::from(h && !y);
                    fn_ += u64::from(!h && y);
                }
                (fp as f64 / n0 as f64 + fn_ as f64 / n1 as f64) / 2.0
            })
            .fold(f64::INFINITY, f64::min);
        let master = build_master_dnf(&ds, &TrainConfig { model: ModelKind::Dnf, ..Default::default() }).map_err(|e| e.to_string())?;
        let sol = Solver::Builtin.solve(&master.model).map_err(|e| e.to_string())?;
        ensure(sol.status == SolveStatus::Optimal, || format!("fixture {k}: status {:?}", sol.status))?;
        let be = sol.objective_value.unwrap_or(f64::NAN) / 2.0;
        ensure((be - best).abs() <= 1e-9, || format!("fixture {k}: master {be} vs enumeration {best}"))?;
    }
    Ok("30 fixtures, master optimum equals best single conjunction".into())
}

fn sparsity_direction() -> Outcome {
    let mut worst_increase = f64::NEG_INFINITY;
    let (mut dense_total, mut sparse_total) = (0, 0);
    for seed in 0..10 {
        let cfg = SynthConfig { n: 300, planted_sd: 0.2, seed: 100 + seed, features: 3, feature_noise: 0.2, ..Default::default() };
        let ds = generate(&cfg).unwrap().dataset().map_err(|e| e.to_string())?;
        let solve = |sparsity: f64| -> Result<(usize, f64), String> {
            let tc = TrainConfig { sparsity, gamma: 1.0, ..Default::default() };
            let res = train(&ds, &tc).map_err(|e| e.to_string())?;
            ensure(res.master_optimal, || format!("seed {seed}: σ={sparsity} not optimal"))?;
            match &res.model {
                ModelSpec::Linear(m) => Ok((m.nonzero_count(), res.balanced_error)),
                ModelSpec::Dnf(_) => Err("expected a linear model".into()),
            }
        };
        let (dense, be0) = solve(0.0)?;
        let (sparse, be1) = solve(0.1)?;
        ensure(sparse <= dense, || format!("seed {seed}: {sparse} nonzeros with σ=0.1 vs {dense}"))?;
        ensure(be1 - be0 <= 0.05, || format!("seed {seed}: BE rose by {}", be1 - be0))?;
        worst_increase = worst_increase.max(be1 - be0);
        dense_total += dense;
        sparse_total += sparse;
    }
    Ok(format!("nonzeros {dense_total} -> {sparse_total} over 10 fixtures, max BE increase {worst_increase:.4}"))
}

fn planted_detection() -> Outcome {
    let start = Instant::now();
    let syn = generate(&SynthConfig { n: 10_000, planted_sd: 0.3, noise_attributes: 2, ..Default::default() }).map_err(|e| e.to_string())?;
    let ds = syn.dataset().map_err(|e| e.to_string())?;
    let yhat = PredictionVector::from_labels(&ds);
    let spsf = SignedWeights::spsf(&ds, &yhat);
    for (a, g) in ds.groups().iter().enumerate() {
        for v in 0..g.len() {
            let m: Vec<bool> = (0..ds.len()).map(|i| ds.code(i, a) == v).collect();
            let value = spsf.to_real(spsf.sum(&m)).abs();
            ensure(value <= 0.01, || format!("{} = {} has SPSF {value}", g.name, g.values[v]))?;
        }
    }
    let mut found = Vec::new();
    for kind in [Measure::SD, Measure::SPSF] {
        let obj = AuditObjective::new(&ds, &yhat, kind).map_err(|e| e.to_string())?;
        let res = audit_conjunction_bnb(&ds, &yhat, &obj, None).map_err(|e| e.to_string())?;
        let s = res.subgroup.ok_or("no subgroup found")?;
        let text = describe(&s, ds.groups());
        ensure(text == "sex = female ∧ race = white", || format!("{kind:?} audit found `{text}`"))?;
        if kind == Measure::SD {
            ensure((res.objective_value - 0.3).abs() < 1e-3, || format!("SD {}", res.objective_value))?;
        }
        found.push(text);
    }
    let t = within(start, 10)?;
    Ok(format!("`{}` recovered by SD and SPSF audits on 10,000 rows, {t:.2?}", found[0]))
}

fn milp_core_soundness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(12);
    let (mut optimal, mut infeasible) = (0, 0);
    for k in 0..500 {
        let nb = r.gen_range(1..=20);
        let model = random_milp(&mut r, nb);
        let sol = Solver::Builtin.solve(&model).map_err(|e| format!("model {k}: {e}"))?;
        let back = parse_lp(&to_lp_string(&model).map_err(|e| e.to_string())?).map_err(|e| format!("model {k}: {e}"))?;
        match enumerate_milp(&model) {
            None => {
                ensure(sol.status == SolveStatus::Infeasible, || format!("model {k}: {:?} but infeasible", sol.status))?;
                let again = Solver::Builtin.solve(&back).map_err(|e| e.to_string())?;
                ensure(again.status == SolveStatus::Infeasible, || format!("model {k}: re-imported model not infeasible"))?;
                infeasible += 1;
            }
            Some(best) => {
                ensure(sol.status == SolveStatus::Optimal, || format!("model {k}: status {:?}", sol.status))?;
                let got = sol.objective_value.unwrap_or(f64::NAN);
                ensure((got - best).abs() <= 1e-7, || format!("model {k}: {got} vs enumeration {best}"))?;
                model.check_point(&sol.values).map_err(|e| format!("model {k}: {e}"))?;
                // The solution, moved to the re-imported model by name, is feasible there too.
                let index = back.name_index();
                let mut moved = vec![0.0; back.variables.len()];
                for (v, &x) in model.variables.iter().zip(&sol.values) {
                    if let Some(id) = index.get(v.name.as_str()) {
                        moved[id.0] = x;
                    }
                }
                back.check_point(&moved).map_err(|e| format!("model {k} after round trip: {e}"))?;
                ensure((back.objective_value(&moved) - got).abs() <= 1e-9, || format!("model {k}: objective changed"))?;
                optimal += 1;
            }
        }
    }
    let t = start.elapsed();
    Ok(format!("500 models ({optimal} optimal, {infeasible} infeasible), {t:.2?}"))
}

fn main() {
    let runs = training_runs();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("SPSF equals conditional SD times P(h)P(not h)", Box::new(spsf_sd_identity)),
        ("SPSF and SD argmax sets coincide", Box::new(argmax_sets_agree)),
        ("FPSF equals P(y=0) times SPSF on the y=0 stratum", Box::new(fpsf_stratum_identity)),
        ("conjunction auditors match enumeration", Box::new(auditors_are_exact)),
        ("linear subgroups contain conjunctions", Box::new(linear_contains_conjunctions)),
        ("training keeps FPSF within gamma", Box::new(|| training_keeps_gamma(&runs))),
        ("fairness costs accuracy and removes unfairness", Box::new(|| tradeoff_direction(&runs))),
        ("SD proxy and FPSF oracles agree", Box::new(sd_proxy_agrees)),
        ("one-clause DNF equals best conjunction", Box::new(dnf_single_clause_is_best_conjunction)),
        ("sparsity lowers nonzeros at small cost", Box::new(sparsity_direction)),
        ("planted intersection is detected", Box::new(planted_detection)),
        ("MILP solver matches enumeration", Box::new(milp_core_soundness)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
