//! Depth-first branch-and-bound over conjunctions. Each sign of the absolute
//! value is a separate maximization; adding a literal only removes members,
//! so the positive mass of the current members bounds every descendant.

use std::time::{Duration, Instant};

use super::{finish, AuditError, AuditObjective, AuditResult, Found};
use crate::dataset::AuditDataset;
use crate::exec::Exec;
use crate::metrics::{collapse, PredictionVector, ProtectedCell};
use crate::milp::SolveStatus;
use crate::subgroups::{Conjunction, Subgroup};

const CLOCK_INTERVAL: u64 = 1024;

struct Branch<'a> {
    cells: &'a [ProtectedCell],
    starts: &'a [usize],
    cards: &'a [usize],
    /// Attribute visiting order.
    order: &'a [usize],
    /// +1 or −1.
    sign: i128,
    n_min: u64,
    /// Subgroups below this many units are unacceptable.
    floor: Option<i128>,
    /// Stop once a subgroup reaches this many units.
    stop_at: Option<i128>,
    deadline: Option<Instant>,
    best: i128,
    best_lits: Option<Vec<usize>>,
    lits: Vec<usize>,
    nodes: u64,
    timed_out: bool,
    stopped: bool,
}

struct BranchOutcome {
    best: i128,
    lits: Option<Vec<usize>>,
    nodes: u64,
    /// Explored everything (not timed out, not stopped at a witness).
    complete: bool,
    root_bound: i128,
}

impl Branch<'_> {
    fn signed(&self, k: usize) -> i128 {
        self.sign * self.cells[k].coef
    }

    fn halted(&mut self) -> bool {
        if self.timed_out || self.stopped {
            return true;
        }
        if self.nodes.is_multiple_of(CLOCK_INTERVAL) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    fn dfs(&mut self, members: &[usize], pos: usize) {
        for p in pos..self.order.len() {
            let a = self.order[p];
            let card = self.cards[a];
            let mut split: Vec<Vec<usize>> = vec![Vec::new(); card];
            let mut mass = vec![0i128; card];
            let mut weight = vec![0u64; card];
            for &k in members {
                let v = self.cells[k].codes[a] as usize;
                split[v].push(k);
                mass[v] += self.signed(k).max(0);
                weight[v] += self.cells[k].weight;
            }
            let mut values: Vec<usize> = (0..card).collect();
            values.sort_by(|&x, &y| mass[y].cmp(&mass[x]).then(x.cmp(&y)));
            for v in values {
                if self.halted() {
                    return;
                }
                // Too small or too light now means the same for every descendant.
                if weight[v] < self.n_min || self.floor.is_some_and(|f| mass[v] < f) {
                    continue;
                }
                if mass[v] <= self.best && self.best_lits.is_some() {
                    continue;
                }
                self.nodes += 1;
                self.lits.push(self.starts[a] + v);
                let value: i128 = split[v].iter().map(|&k| self.signed(k)).sum();
                if value > self.best || self.best_lits.is_none() && value >= self.best {
                    self.best = value;
                    self.best_lits = Some(self.lits.clone());
                    if self.stop_at.is_some_and(|s| value >= s) {
                        self.stopped = true;
                        self.lits.pop();
                        return;
                    }
                }
                if mass[v] > self.best {
                    self.dfs(&split[v], p + 1);
                }
                self.lits.pop();
            }
        }
    }
}

/// Exact conjunction audit by branch-and-bound; the two sign branches run
/// concurrently under [`Exec::Parallel`].
pub fn audit_conjunction_bnb_with(
    ds: &AuditDataset,
    yhat: &PredictionVector,
    obj: &AuditObjective,
    time_limit: Option<f64>,
    exec: Exec,
) -> Result<AuditResult, AuditError> {
    let start = Instant::now();
    let deadline = time_limit.map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let cells = collapse(ds, &obj.weights);
    let groups = ds.groups();
    let starts: Vec<usize> = groups.iter().map(|g| g.start).collect();
    let cards: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&x, &y| cards[y].cmp(&cards[x]).then(x.cmp(&y)));
    let floor = obj.floor_units();
    let stop_at = if obj.feasibility_only { floor } else { None };

    let run = |sign: i128| {
        let mut b = Branch {
            cells: &cells,
            starts: &starts,
            cards: &cards,
            order: &order,
            sign,
            n_min: obj.n_min,
            floor,
            stop_at,
            deadline,
            // Accept only nonnegative values in this branch; the other sign covers the rest.
            best: 0,
            best_lits: None,
            lits: Vec::new(),
            nodes: 0,
            timed_out: false,
            stopped: false,
        };
        let all: Vec<usize> = (0..cells.len()).collect();
        let root_bound = all.iter().map(|&k| b.signed(k).max(0)).sum();
        b.dfs(&all, 0);
        BranchOutcome { best: b.best, lits: b.best_lits, nodes: b.nodes, complete: !b.timed_out && !b.stopped, root_bound }
    };
    let (pos, neg) = if stop_at.is_some() {
        // A witness from the first branch settles a feasibility search.
        let pos = run(1);
        let found = pos.lits.is_some() && stop_at.is_some_and(|s| pos.best >= s);
        let neg = if found { skipped() } else { run(-1) };
        (pos, neg)
    } else {
        exec.join(|| run(1), || run(-1))
    };

    let nodes = pos.nodes + neg.nodes;
    let complete = pos.complete && neg.complete;
    let winner = match (&pos.lits, &neg.lits) {
        (Some(_), Some(_)) if neg.best > pos.best => &neg,
        (Some(_), _) => &pos,
        (None, Some(_)) => &neg,
        (None, None) => &pos,
    };
    let mut lits = winner.lits.clone();
    let mut best = if lits.is_some() { winner.best } else { -1 };
    if let Some(f) = floor {
        if best < f {
            lits = None;
            best = -1;
        }
    }
    let branch_bound = |b: &BranchOutcome| if b.complete { b.best.max(0) } else { b.root_bound };
    let bound_units = branch_bound(&pos).max(branch_bound(&neg));
    let stopped_early = stop_at.is_some_and(|s| best >= s);
    let status = match (&lits, complete || stopped_early, stopped_early) {
        (Some(_), _, true) => SolveStatus::Feasible,
        (Some(_), true, _) => SolveStatus::Optimal,
        (Some(_), false, _) => SolveStatus::TimeLimit,
        (None, true, _) => SolveStatus::Infeasible,
        (None, false, _) => SolveStatus::TimeLimit,
    };
    let bound = if status == SolveStatus::Optimal { obj.weights.to_real(best) } else { obj.weights.to_real(bound_units) };
    let subgroup = lits.map(|l| Subgroup::from(Conjunction { literals: sorted(l), n_min: obj.n_min }));
    Ok(finish(ds, yhat, obj, Found { subgroup, status, bound, nodes, warm_start_value: None }, start))
}

fn skipped() -> BranchOutcome {
    BranchOutcome { best: 0, lits: None, nodes: 0, complete: true, root_bound: 0 }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}
