mod common;

use std::time::Instant;

use common::*;
use fairmio::auditor::*;
use fairmio::dataset::AuditDataset;
use fairmio::metrics::{msd_enumerate, Measure, PredictionVector};
use fairmio::milp::SolveStatus;
use fairmio::subgroups::{membership, Conjunction, Subgroup};
use rand::Rng;

#[test]
fn disjoint_supports_give_sd_one() {
    let codes: Vec<Vec<usize>> = (0..8).map(|i| vec![usize::from(i >= 4), i % 2]).collect();
    let labels: Vec<bool> = (0..8).map(|i| i < 4).collect();
    let ds = AuditDataset::from_codes(&[("a", &["1", "0"]), ("b", &["x", "y"])], &codes, labels, vec![1; 8]).unwrap();
    let yhat = PredictionVector::from_labels(&ds);
    let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap();
    let r = audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.objective_value, 1.0);
    let s = r.subgroup.unwrap();
    assert!(s == Conjunction { literals: vec![0], n_min: 0 }.into() || s == Conjunction { literals: vec![1], n_min: 0 }.into());
}

#[test]
fn bnb_and_milp_match_enumeration() {
    let mut r = rng(11);
    let start = Instant::now();
    for _ in 0..25 {
        let cards = random_cards(&mut r, 3, 3, 8);
        let n = r.gen_range(10..120);
        let ds = random_dataset(&mut r, &cards, n, 4);
        let yhat = random_predictions(&mut r, &ds, 0.2);
        for kind in [Measure::SD, Measure::SPSF, Measure::FPSF] {
            let obj = AuditObjective::new(&ds, &yhat, kind).unwrap();
            let oracle = match kind {
                Measure::SD => brute_max(&ds, |m| sd_oracle(&ds, yhat.values(), m), 1e-12).0,
                Measure::SPSF => brute_max(&ds, |m| spsf_oracle(&ds, yhat.values(), m), 1e-12).0,
                Measure::FPSF => brute_max(&ds, |m| fpsf_oracle(&ds, yhat.values(), m), 1e-12).0,
            };
            let b = audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap();
            let m = audit_conjunction_milp(&ds, &yhat, &obj, None).unwrap();
            assert_eq!(b.status, SolveStatus::Optimal);
            assert_eq!(m.status, SolveStatus::Optimal);
            assert!((b.objective_value - oracle).abs() < 1e-9, "{kind:?} bnb {} vs {oracle}", b.objective_value);
            assert!((m.objective_value - oracle).abs() < 1e-7, "{kind:?} milp {} vs {oracle}", m.objective_value);
        }
    }
    eprintln!("elapsed {:?}", start.elapsed());
}

#[test]
fn n_min_and_floor_infeasibility() {
    let mut r = rng(3);
    let ds = random_dataset(&mut r, &[2, 2], 30, 3);
    let yhat = random_predictions(&mut r, &ds, 0.2);
    let total = ds.total_weight();
    let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap().with_n_min(total + 1);
    assert_eq!(audit_conjunction_milp(&ds, &yhat, &obj, None).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap().status, SolveStatus::Infeasible);
    let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap().with_gamma_floor(2.0, false);
    assert_eq!(audit_conjunction_milp(&ds, &yhat, &obj, None).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn linear_audit_contains_conjunctions() {
    let mut r = rng(5);
    for _ in 0..5 {
        let ds = random_dataset(&mut r, &[2, 2], 40, 3);
        let yhat = random_predictions(&mut r, &ds, 0.25);
        let obj = AuditObjective::new(&ds, &yhat, Measure::SPSF).unwrap();
        let conj = audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap();
        let warm = conj.subgroup.as_ref().unwrap().as_conjunction().unwrap().to_linear(ds.width());
        let lin = audit_linear_milp(&ds, &yhat, &obj, Some(&warm), Some(30.0)).unwrap();
        assert_eq!(lin.status, SolveStatus::Optimal);
        assert!(lin.objective_value >= conj.objective_value - 1e-7);
        assert!((lin.warm_start_value.unwrap() - conj.objective_value).abs() < 1e-12);
    }
}

#[test]
fn single_column_linear_matches_threshold_enumeration() {
    let mut r = rng(8);
    let ds = random_dataset(&mut r, &[2], 25, 3);
    let yhat = random_predictions(&mut r, &ds, 0.3);
    let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap();
    let lin = audit_linear_milp(&ds, &yhat, &obj, None, None).unwrap();
    let best = [vec![0usize], vec![1]]
        .into_iter()
        .map(|l| {
            let s: Subgroup = Conjunction { literals: l, n_min: 0 }.into();
            sd_oracle(&ds, yhat.values(), &membership(&s, &ds).unwrap())
        })
        .fold(0.0, f64::max);
    assert!((lin.objective_value - best).abs() < 1e-9);
}

#[test]
fn logistic_separates_disjoint_parts() {
    let codes: Vec<Vec<usize>> = (0..12).map(|i| vec![usize::from(i % 3 == 0), i % 2]).collect();
    let ds = AuditDataset::from_codes(&[("a", &["1", "0"]), ("b", &["x", "y"])], &codes, vec![true; 12], vec![1; 12]).unwrap();
    let part1: Vec<usize> = (0..12).filter(|&i| ds.protected_row(i)[0] == 1).collect();
    let part2: Vec<usize> = (0..12).filter(|&i| ds.protected_row(i)[0] == 0).collect();
    let g = logistic_warm_start(&ds, &part1, &part2).unwrap();
    let max = g.c.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    assert!((max - 1.0).abs() < 1e-12);
    let m = membership(&Subgroup::Linear(g), &ds).unwrap();
    for i in 0..12 {
        assert_eq!(m[i], ds.protected_row(i)[0] == 1);
    }
    let same = logistic_warm_start(&ds, &part1, &part1).unwrap();
    let m = membership(&Subgroup::Linear(same), &ds).unwrap();
    let sd = fairmio::metrics::SignedWeights::sd(&ds, &part1, &part1).unwrap();
    assert_eq!(sd.sum(&m), 0);
}

#[test]
fn gamma_checks() {
    let mut r = rng(21);
    let ds = random_dataset(&mut r, &[2, 3], 60, 3);
    let constant = PredictionVector::new(&ds, vec![true; ds.len()]).unwrap();
    let c = check_gamma(&ds, &constant, Measure::SPSF, 0.01, SubgroupClass::Conjunction, None).unwrap();
    assert!(c.satisfied());
    let yhat = random_predictions(&mut r, &ds, 0.3);
    let c = check_gamma(&ds, &yhat, Measure::SPSF, 0.0, SubgroupClass::Conjunction, None).unwrap();
    assert_eq!(c.status, GammaStatus::Violated);
    assert!(c.witness_value.unwrap() > 0.0);
    let c = check_gamma(&ds, &yhat, Measure::SPSF, 0.3, SubgroupClass::Conjunction, None).unwrap();
    assert!(c.satisfied());
    // Linear class through the MILP.
    let c = check_gamma(&ds, &yhat, Measure::FPSF, 0.0, SubgroupClass::Linear, Some(30.0)).unwrap();
    assert_eq!(c.status, GammaStatus::Violated);
}

#[test]
fn zero_time_limit_reports_no_incumbent() {
    let mut r = rng(2);
    let ds = random_dataset(&mut r, &[2, 2], 30, 3);
    let yhat = random_predictions(&mut r, &ds, 0.2);
    let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap();
    let b = audit_conjunction_bnb(&ds, &yhat, &obj, Some(0.0)).unwrap();
    assert_eq!(b.status, SolveStatus::TimeLimit);
    assert!(b.subgroup.is_none());
}

#[test]
fn argmax_matches_msd_enumerate() {
    let mut r = rng(17);
    for _ in 0..20 {
        let cards = random_cards(&mut r, 3, 3, 9);
        let n = r.gen_range(5..60);
        let ds = random_dataset(&mut r, &cards, n, 5);
        let yhat = random_predictions(&mut r, &ds, 0.3);
        let (v, argmax) = msd_enumerate(&ds, &yhat.positive_rows(), &yhat.negative_rows()).unwrap();
        let obj = AuditObjective::new(&ds, &yhat, Measure::SD).unwrap();
        let b = audit_conjunction_bnb(&ds, &yhat, &obj, None).unwrap();
        assert!((b.objective_value - v).abs() < 1e-12);
        assert!(argmax.contains(b.subgroup.as_ref().unwrap()));
    }
}
