use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::simplex::{LpProblem, LpStatus, Tableau};
use super::{MilpError, MilpModel, MilpSolution, ObjectiveSense, SolveStatus, VarKind, INT_TOL};

/// Upper bound on memory held by parked warm-start tableaux.
const WARM_BUDGET_BYTES: usize = 256 << 20;
const LP_VERIFY_TOL: f64 = 1e-7;
/// Nodes between rounding attempts on fractional relaxations.
const ROUNDING_PERIOD: usize = 16;

struct Warm {
    tab: Option<Tableau>,
    live: Rc<Cell<usize>>,
}

impl Drop for Warm {
    fn drop(&mut self) {
        self.live.set(self.live.get() - 1);
    }
}

struct Node {
    /// Relaxation bound in minimization form.
    bound: f64,
    depth: usize,
    seq: usize,
    fixes: Vec<(usize, f64)>,
    warm: Option<Rc<Warm>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: best (lowest) bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

#[allow(clippy::large_enum_variant)]
enum Relaxation {
    Solved(Tableau),
    Infeasible,
}

struct Search<'a> {
    model: &'a MilpModel,
    problem: Arc<LpProblem>,
    binaries: Vec<usize>,
}

impl Search<'_> {
    fn reoptimize(&self, mut tab: Tableau) -> Result<Relaxation, MilpError> {
        match tab.resolve() {
            LpStatus::Optimal if tab.max_violation() <= LP_VERIFY_TOL => Ok(Relaxation::Solved(tab)),
            LpStatus::Infeasible => Ok(Relaxation::Infeasible),
            _ => self.cold(tab.lower(), tab.upper()),
        }
    }

    fn cold(&self, lower: &[f64], upper: &[f64]) -> Result<Relaxation, MilpError> {
        match Tableau::solve_cold(self.problem.clone(), lower, upper) {
            (LpStatus::Optimal, Some(tab)) => Ok(Relaxation::Solved(tab)),
            (LpStatus::Infeasible, _) => Ok(Relaxation::Infeasible),
            (LpStatus::Unbounded, _) => Err(MilpError::Unbounded),
            _ => Err(MilpError::MalformedModel("relaxation failed to converge".into())),
        }
    }

    /// Rounds binaries and returns the point when it passes the feasibility check,
    /// re-solving the continuous part with binaries pinned if rounding broke a row.
    fn accept_integral(&self, tab: &Tableau) -> Result<Option<Vec<f64>>, MilpError> {
        let mut x = tab.structural_values();
        for &j in &self.binaries {
            x[j] = x[j].round();
        }
        if self.model.check_point(&x).is_ok() {
            return Ok(Some(x));
        }
        let mut pinned = tab.clone();
        for &j in &self.binaries {
            pinned.set_bounds(j, x[j], x[j]);
        }
        if let Relaxation::Solved(t) = self.reoptimize(pinned)? {
            let mut y = t.structural_values();
            for &j in &self.binaries {
                y[j] = y[j].round();
            }
            if self.model.check_point(&y).is_ok() {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        self.most_fractional_above(x, INT_TOL)
    }

    fn most_fractional_above(&self, x: &[f64], tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > tol && best.is_none_or(|(_, f)| frac > f + 1e-12) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }
}

/// Solves a mixed-binary program by branch-and-bound over the binaries with a
/// simplex relaxation at every node: plunges depth-first after each branching,
/// otherwise picks the best open bound.
pub fn solve(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let deadline = model.time_limit.map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let sign = match model.objective.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };
    let n = model.variables.len();
    let m = model.constraints.len();
    let mut cols = vec![Vec::new(); n];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            cols[v.0].push((i, a));
        }
    }
    let mut cost = vec![0.0; n];
    for &(v, c) in &model.objective.terms {
        cost[v.0] += sign * c;
    }
    let problem = Arc::new(LpProblem {
        m,
        n,
        cols,
        rhs: model.constraints.iter().map(|c| c.rhs).collect(),
        senses: model.constraints.iter().map(|c| c.sense).collect(),
        cost,
    });
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let search = Search {
        model,
        problem,
        binaries: model
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
            .collect(),
    };
    let to_user = |internal: f64| sign * internal + model.objective.constant;

    let root = match search.cold(&lower, &upper)? {
        Relaxation::Solved(t) => t,
        Relaxation::Infeasible => {
            return Ok(MilpSolution {
                status: SolveStatus::Infeasible,
                values: Vec::new(),
                objective_value: None,
                best_bound: to_user(f64::INFINITY),
                nodes: 1,
                warm_start_objective: None,
            })
        }
    };
    let root = Rc::new(root);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut warm_start_objective = None;
    if let Some(ws) = &model.warm_start {
        let mut tab = (*root).clone();
        for &(v, val) in ws {
            if model.variables[v.0].kind == VarKind::Binary {
                let val = val.round().clamp(0.0, 1.0);
                tab.set_bounds(v.0, val, val);
            }
        }
        if let Relaxation::Solved(t) = search.reoptimize(tab)? {
            if search.most_fractional(&t.structural_values()).is_none() {
                if let Some(x) = search.accept_integral(&t)? {
                    let obj = sign * (model.objective_value(&x) - model.objective.constant);
                    warm_start_objective = Some(to_user(obj));
                    incumbent = Some((obj, x));
                }
            }
        }
    }

    let live = Rc::new(Cell::new(0usize));
    let warm_cap = (WARM_BUDGET_BYTES / root.size_bytes().max(1)).max(2);
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { bound: root.objective(), depth: 0, seq, fixes: Vec::new(), warm: None });
    let mut nodes = 0usize;
    let mut timed_out = false;

    let gap_of = |inc: f64| model.gap_tolerance * inc.abs().max(1.0);

    // Depth-first plunge from the last branching, else best bound.
    let mut dive: Option<Node> = None;
    while let Some(node) = dive.take().or_else(|| heap.pop()) {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= *inc - gap_of(*inc) {
                continue;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        let relaxation = if node.depth == 0 {
            Relaxation::Solved((*root).clone())
        } else {
            let mut tab = match node.warm {
                Some(w) => match Rc::try_unwrap(w) {
                    Ok(mut owned) => owned.tab.take().expect("warm tableau present"),
                    Err(shared) => shared.tab.clone().expect("warm tableau present"),
                },
                None => {
                    let mut t = (*root).clone();
                    for &(j, v) in &node.fixes[..node.fixes.len() - 1] {
                        t.set_bounds(j, v, v);
                    }
                    t
                }
            };
            let &(j, v) = node.fixes.last().expect("non-root node has a fix");
            tab.set_bounds(j, v, v);
            search.reoptimize(tab)?
        };
        let tab = match relaxation {
            Relaxation::Solved(t) => t,
            Relaxation::Infeasible => continue,
        };
        let bound = tab.objective();
        if let Some((inc, _)) = &incumbent {
            if bound >= *inc - gap_of(*inc) {
                continue;
            }
        }
        let x = tab.structural_values();
        let mut branch_on = search.most_fractional(&x);
        if branch_on.is_some() && nodes % ROUNDING_PERIOD == 1 {
            if let Some(point) = search.accept_integral(&tab)? {
                let obj = sign * (model.objective_value(&point) - model.objective.constant);
                if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                    incumbent = Some((obj, point));
                }
            }
        }
        if branch_on.is_none() {
            match search.accept_integral(&tab)? {
                Some(point) => {
                    let obj = sign * (model.objective_value(&point) - model.objective.constant);
                    if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                        incumbent = Some((obj, point));
                    }
                }
                // Nearly integral, but rounding breaks a row (large big-M): keep branching.
                None => branch_on = search.most_fractional_above(&x, 0.0),
            }
        }
        match branch_on {
            None => {}
            Some(j) => {
                let warm = if live.get() < warm_cap {
                    live.set(live.get() + 1);
                    Some(Rc::new(Warm { tab: Some(tab), live: live.clone() }))
                } else {
                    None
                };
                // Round-to-nearest child first in the sequence so ties favour it.
                let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
                for val in [first, 1.0 - first] {
                    seq += 1;
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, val));
                    let child = Node { bound, depth: node.depth + 1, seq, fixes, warm: warm.clone() };
                    if val == first {
                        dive = Some(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }

    let (status, best_internal) = if timed_out {
        let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let b = match &incumbent {
            Some((inc, _)) => open.min(*inc),
            None => open,
        };
        (SolveStatus::TimeLimit, b)
    } else {
        match &incumbent {
            Some((inc, _)) => (SolveStatus::Optimal, *inc),
            None => (SolveStatus::Infeasible, f64::INFINITY),
        }
    };
    let (values, objective_value) = match incumbent {
        Some((obj, x)) => (x, Some(to_user(obj))),
        None => (Vec::new(), None),
    };
    Ok(MilpSolution {
        status,
        values,
        objective_value,
        best_bound: to_user(best_internal),
        nodes,
        warm_start_objective,
    })
}
