//! Dense bounded-variable simplex.
//!
//! Rows are `a_i x + s_i = b_i` with one slack per row whose bounds encode the
//! row sense. Phase 1 uses artificial columns on rows whose slack starts out of
//! bounds. After an optimal solve the tableau stays dual feasible, so
//! branch-and-bound children only tighten bounds and re-optimize with the dual
//! simplex.

use std::sync::Arc;

use super::Sense;

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 50;

/// Immutable standard-form data shared by every node of one solve.
#[derive(Debug)]
pub(crate) struct LpProblem {
    pub m: usize,
    pub n: usize,
    /// Column-sparse structural matrix.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub senses: Vec<Sense>,
    /// Minimization costs over structural columns.
    pub cost: Vec<f64>,
}

impl LpProblem {
    fn slack_bounds(&self, row: usize) -> (f64, f64) {
        match self.senses[row] {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic column parked at zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration budget exhausted; the caller should fall back to a cold solve.
    Stalled,
}

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    problem: Arc<LpProblem>,
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
}

impl Tableau {
    /// Builds a fresh tableau and runs both primal phases.
    pub fn solve_cold(
        problem: Arc<LpProblem>,
        lower: &[f64],
        upper: &[f64],
    ) -> (LpStatus, Option<Tableau>) {
        let m = problem.m;
        let n = problem.n;
        for j in 0..n {
            if lower[j] > upper[j] + PRIMAL_TOL {
                return (LpStatus::Infeasible, None);
            }
        }
        let mut state = Vec::with_capacity(n + m);
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        let mut xval = vec![0.0; n];
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            lo.push(l);
            hi.push(u);
            let st = if l.is_finite() {
                ColState::Lower
            } else if u.is_finite() {
                ColState::Upper
            } else {
                ColState::Zero
            };
            xval[j] = match st {
                ColState::Lower => l,
                ColState::Upper => u,
                _ => 0.0,
            };
            state.push(st);
        }
        let mut resid = problem.rhs.clone();
        for (j, col) in problem.cols.iter().enumerate() {
            if xval[j] != 0.0 {
                for &(i, a) in col {
                    resid[i] -= a * xval[j];
                }
            }
        }
        // Artificial columns for rows whose slack would start out of bounds.
        let mut arts: Vec<(usize, f64)> = Vec::new();
        let mut slack_state = vec![ColState::Basic; m];
        let mut beta = vec![0.0; m];
        for i in 0..m {
            let (sl, su) = problem.slack_bounds(i);
            let r = resid[i];
            if r >= sl - PRIMAL_TOL && r <= su + PRIMAL_TOL {
                beta[i] = r;
            } else {
                let v = r.clamp(sl, su);
                slack_state[i] = if v == sl { ColState::Lower } else { ColState::Upper };
                let sigma = if r > v { 1.0 } else { -1.0 };
                arts.push((i, sigma));
                beta[i] = (r - v).abs();
            }
        }
        for i in 0..m {
            let (sl, su) = problem.slack_bounds(i);
            lo.push(sl);
            hi.push(su);
            state.push(slack_state[i]);
        }
        let ncols = n + m + arts.len();
        let mut t = vec![0.0; m * ncols];
        for (j, col) in problem.cols.iter().enumerate() {
            for &(i, a) in col {
                t[i * ncols + j] += a;
            }
        }
        for i in 0..m {
            t[i * ncols + n + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (k, &(i, sigma)) in arts.iter().enumerate() {
            let col = n + m + k;
            t[i * ncols + col] = sigma;
            if sigma < 0.0 {
                for v in &mut t[i * ncols..(i + 1) * ncols] {
                    *v = -*v;
                }
            }
            basis[i] = col;
            lo.push(0.0);
            hi.push(f64::INFINITY);
            state.push(ColState::Basic);
        }
        for i in 0..m {
            if slack_state[i] == ColState::Basic {
                state[n + i] = ColState::Basic;
            }
        }
        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&problem.cost);
        let mut tab = Tableau {
            problem,
            m,
            ncols,
            t,
            beta,
            basis,
            state,
            lower: lo,
            upper: hi,
            cost,
            d: vec![0.0; ncols],
        };

        if !arts.is_empty() {
            let mut phase1 = vec![0.0; ncols];
            for k in 0..arts.len() {
                phase1[n + m + k] = 1.0;
            }
            tab.reset_reduced_costs(&phase1);
            match tab.primal(usize::MAX) {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => unreachable!("phase 1 objective is bounded below"),
                other => return (other, None),
            }
            let infeas: f64 = (0..m)
                .filter(|&i| tab.basis[i] >= n + m)
                .map(|i| tab.beta[i])
                .sum();
            if infeas > 1e-7 {
                return (LpStatus::Infeasible, None);
            }
            tab.drop_artificials(n + m);
        }
        let costs = tab.cost.clone();
        tab.reset_reduced_costs(&costs);
        let status = tab.primal(usize::MAX);
        if status == LpStatus::Optimal {
            (status, Some(tab))
        } else {
            (status, None)
        }
    }

    fn reset_reduced_costs(&mut self, costs: &[f64]) {
        let nc = self.ncols;
        let mut d = costs.to_vec();
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * nc..(i + 1) * nc];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    /// Pivots zero-valued artificials out of the basis where possible and
    /// removes every nonbasic artificial column.
    fn drop_artificials(&mut self, first_art: usize) {
        let nc = self.ncols;
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let row = &self.t[r * nc..(r + 1) * nc];
            let mut best: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate().take(first_art) {
                if self.state[j] != ColState::Basic && a.abs() > 1e-7 && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            if let Some((q, _)) = best {
                // Degenerate pivot: the artificial sits at zero, so values do not move.
                let leaving = self.basis[r];
                let xq = self.nonbasic_value(q);
                self.pivot(r, q);
                self.beta[r] = xq;
                self.state[leaving] = ColState::Lower;
            }
        }
        // Fix any remaining basic artificials (redundant rows) at zero.
        let keep: Vec<usize> = (0..nc)
            .filter(|&j| j < first_art || self.state[j] == ColState::Basic)
            .collect();
        for &j in &keep {
            if j >= first_art {
                self.upper[j] = 0.0;
            }
        }
        if keep.len() == nc {
            return;
        }
        let new_nc = keep.len();
        let mut remap = vec![usize::MAX; nc];
        for (k, &j) in keep.iter().enumerate() {
            remap[j] = k;
        }
        let mut t = vec![0.0; self.m * new_nc];
        for i in 0..self.m {
            for (k, &j) in keep.iter().enumerate() {
                t[i * new_nc + k] = self.t[i * nc + j];
            }
        }
        self.t = t;
        self.ncols = new_nc;
        self.basis = self.basis.iter().map(|&b| remap[b]).collect();
        self.state = keep.iter().map(|&j| self.state[j]).collect();
        self.lower = keep.iter().map(|&j| self.lower[j]).collect();
        self.upper = keep.iter().map(|&j| self.upper[j]).collect();
        self.cost = keep.iter().map(|&j| self.cost[j]).collect();
        self.d = keep.iter().map(|&j| self.d[j]).collect();
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Lower => self.lower[j],
            ColState::Upper => self.upper[j],
            ColState::Zero => 0.0,
            ColState::Basic => unreachable!("basic column has no parked value"),
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        let (head, rest) = self.t.split_at_mut(r * nc);
        let (prow, tail) = rest.split_at_mut(nc);
        for chunk in head.chunks_exact_mut(nc).chain(tail.chunks_exact_mut(nc)) {
            let f = chunk[q];
            if f != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                chunk[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
        self.state[q] = ColState::Basic;
    }

    /// Primal simplex on the current reduced costs. Requires a primal feasible basis.
    fn primal(&mut self, max_iter: usize) -> LpStatus {
        let nc = self.ncols;
        let mut degenerate = 0usize;
        let mut iter = 0usize;
        let limit = max_iter.min(50 * (self.m + nc) + 1000);
        loop {
            iter += 1;
            if iter > limit {
                return LpStatus::Stalled;
            }
            let bland = degenerate >= BLAND_AFTER;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..nc {
                let dir = match self.state[j] {
                    ColState::Basic => continue,
                    _ if self.lower[j] == self.upper[j] => continue,
                    ColState::Lower if self.d[j] < -DUAL_TOL => 1.0,
                    ColState::Upper if self.d[j] > DUAL_TOL => -1.0,
                    ColState::Zero if self.d[j].abs() > DUAL_TOL => -self.d[j].signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if self.d[j].abs() > best {
                    best = self.d[j].abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return LpStatus::Optimal;
            };

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let delta = dir * self.t[i * nc + q];
                let b = self.basis[i];
                if delta > PIVOT_TOL && self.lower[b].is_finite() {
                    theta_max = theta_max.min((self.beta[i] - self.lower[b] + PRIMAL_TOL) / delta);
                } else if delta < -PIVOT_TOL && self.upper[b].is_finite() {
                    theta_max = theta_max.min((self.upper[b] - self.beta[i] + PRIMAL_TOL) / -delta);
                }
            }
            let flip = self.upper[q] - self.lower[q];
            if flip.is_finite() && flip <= theta_max {
                self.bound_flip(q, dir, flip);
                degenerate = 0;
                continue;
            }
            if theta_max == f64::INFINITY {
                return LpStatus::Unbounded;
            }
            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let delta = dir * self.t[i * nc + q];
                let b = self.basis[i];
                let ratio = if delta > PIVOT_TOL && self.lower[b].is_finite() {
                    (self.beta[i] - self.lower[b]) / delta
                } else if delta < -PIVOT_TOL && self.upper[b].is_finite() {
                    (self.upper[b] - self.beta[i]) / -delta
                } else {
                    continue;
                };
                if ratio <= theta_max {
                    let better = match leave {
                        None => true,
                        Some((li, _, la)) => {
                            if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                delta.abs() > la
                            }
                        }
                    };
                    if better {
                        leave = Some((i, ratio.max(0.0), delta.abs()));
                    }
                }
            }
            let (r, theta, _) = leave.expect("finite ratio bound implies a leaving row");
            if theta < DEGENERATE_STEP {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            let delta_r = dir * self.t[r * nc + q];
            let leaving = self.basis[r];
            let leave_state = if delta_r > 0.0 { ColState::Lower } else { ColState::Upper };
            let entering_value = self.nonbasic_value(q) + dir * theta;
            for i in 0..self.m {
                let a = self.t[i * nc + q];
                if a != 0.0 {
                    self.beta[i] -= dir * theta * a;
                }
            }
            self.pivot(r, q);
            self.beta[r] = entering_value;
            self.state[leaving] = leave_state;
        }
    }

    fn bound_flip(&mut self, q: usize, dir: f64, step: f64) {
        let nc = self.ncols;
        for i in 0..self.m {
            let a = self.t[i * nc + q];
            if a != 0.0 {
                self.beta[i] -= dir * step * a;
            }
        }
        self.state[q] = if dir > 0.0 { ColState::Upper } else { ColState::Lower };
    }

    /// Tightens the bounds of a structural column, moving it if nonbasic.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.state[j] == ColState::Basic {
            return;
        }
        let old = self.nonbasic_value(j);
        let st = if lower.is_finite() && (self.state[j] != ColState::Upper || !upper.is_finite()) {
            ColState::Lower
        } else if upper.is_finite() {
            ColState::Upper
        } else {
            ColState::Zero
        };
        self.state[j] = st;
        let new = self.nonbasic_value(j);
        let shift = new - old;
        if shift != 0.0 {
            let nc = self.ncols;
            for i in 0..self.m {
                let a = self.t[i * nc + j];
                if a != 0.0 {
                    self.beta[i] -= a * shift;
                }
            }
        }
    }

    /// Dual simplex from a dual feasible basis, then a primal cleanup pass.
    pub fn resolve(&mut self) -> LpStatus {
        for j in 0..self.ncols {
            if self.lower[j] > self.upper[j] + PRIMAL_TOL {
                return LpStatus::Infeasible;
            }
        }
        match self.dual(50 * (self.m + self.ncols) + 1000) {
            LpStatus::Optimal => self.primal(usize::MAX),
            other => other,
        }
    }

    fn dual(&mut self, max_iter: usize) -> LpStatus {
        let nc = self.ncols;
        let mut refreshed = false;
        for _ in 0..max_iter {
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut worst = PRIMAL_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let below = self.lower[b] - self.beta[i];
                let above = self.beta[i] - self.upper[b];
                if below > worst {
                    worst = below;
                    leave = Some((i, self.lower[b], true));
                } else if above > worst {
                    worst = above;
                    leave = Some((i, self.upper[b], false));
                }
            }
            let Some((r, target, increase)) = leave else {
                return LpStatus::Optimal;
            };
            let row = &self.t[r * nc..(r + 1) * nc];
            let eligible = |j: usize, a: f64| -> bool {
                let st = self.state[j];
                if st == ColState::Basic || self.lower[j] == self.upper[j] || a.abs() <= PIVOT_TOL {
                    return false;
                }
                let can_up = matches!(st, ColState::Lower | ColState::Zero);
                let can_down = matches!(st, ColState::Upper | ColState::Zero);
                if increase {
                    (can_up && a < 0.0) || (can_down && a > 0.0)
                } else {
                    (can_up && a > 0.0) || (can_down && a < 0.0)
                }
            };
            let mut bound = f64::INFINITY;
            for (j, &a) in row.iter().enumerate() {
                if eligible(j, a) {
                    bound = bound.min((self.d[j].abs() + DUAL_TOL) / a.abs());
                }
            }
            if bound == f64::INFINITY {
                // Only trust the certificate once drift in the basic values is ruled out.
                if refreshed {
                    return LpStatus::Infeasible;
                }
                self.refresh_beta();
                refreshed = true;
                continue;
            }
            let mut enter: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate() {
                if eligible(j, a) && self.d[j].abs() / a.abs() <= bound && enter.is_none_or(|(_, best)| a.abs() > best) {
                    enter = Some((j, a.abs()));
                }
            }
            let (q, _) = enter.expect("bound is attained by some eligible column");
            let alpha = row[q];
            let step = (self.beta[r] - target) / alpha;
            let entering_value = self.nonbasic_value(q) + step;
            let leaving = self.basis[r];
            for i in 0..self.m {
                let a = self.t[i * nc + q];
                if a != 0.0 {
                    self.beta[i] -= a * step;
                }
            }
            self.pivot(r, q);
            self.beta[r] = entering_value;
            self.state[leaving] = if increase { ColState::Lower } else { ColState::Upper };
            refreshed = false;
        }
        LpStatus::Stalled
    }

    /// Recomputes basic values from the problem data. The slack columns of the
    /// tableau hold the basis inverse (up to the row signs used in phase 1,
    /// which cancel here).
    fn refresh_beta(&mut self) {
        let p = &self.problem;
        let (n, m, nc) = (p.n, self.m, self.ncols);
        let mut r = p.rhs.clone();
        for (j, col) in p.cols.iter().enumerate() {
            if self.state[j] != ColState::Basic {
                let x = self.nonbasic_value(j);
                if x != 0.0 {
                    for &(i, a) in col {
                        r[i] -= a * x;
                    }
                }
            }
        }
        for k in 0..m {
            if self.state[n + k] != ColState::Basic {
                r[k] -= self.nonbasic_value(n + k);
            }
        }
        for i in 0..m {
            let row = &self.t[i * nc + n..i * nc + n + m];
            self.beta[i] = row.iter().zip(&r).map(|(a, b)| a * b).sum();
        }
    }

    /// Structural column values.
    pub fn structural_values(&self) -> Vec<f64> {
        let n = self.problem.n;
        let mut x = vec![0.0; n];
        for (j, xj) in x.iter_mut().enumerate() {
            if self.state[j] != ColState::Basic {
                *xj = self.nonbasic_value(j);
            }
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < n {
                x[b] = self.beta[i];
            }
        }
        x
    }

    pub fn objective(&self) -> f64 {
        self.structural_values()
            .iter()
            .zip(&self.problem.cost)
            .map(|(x, c)| x * c)
            .sum()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.problem.n]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.problem.n]
    }

    pub fn size_bytes(&self) -> usize {
        self.t.len() * std::mem::size_of::<f64>()
    }

    /// Worst violation of rows and bounds by the current structural values.
    pub fn max_violation(&self) -> f64 {
        let x = self.structural_values();
        let p = &self.problem;
        let mut act = vec![0.0; p.m];
        for (j, col) in p.cols.iter().enumerate() {
            for &(i, a) in col {
                act[i] += a * x[j];
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..p.m {
            let v = match p.senses[i] {
                Sense::Le => act[i] - p.rhs[i],
                Sense::Ge => p.rhs[i] - act[i],
                Sense::Eq => (act[i] - p.rhs[i]).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..p.n {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(
        rows: &[(&[f64], Sense, f64)],
        cost: &[f64],
    ) -> Arc<LpProblem> {
        let n = cost.len();
        let mut cols = vec![Vec::new(); n];
        for (i, (coef, _, _)) in rows.iter().enumerate() {
            for (j, &a) in coef.iter().enumerate() {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        Arc::new(LpProblem {
            m: rows.len(),
            n,
            cols,
            rhs: rows.iter().map(|r| r.2).collect(),
            senses: rows.iter().map(|r| r.1).collect(),
            cost: cost.to_vec(),
        })
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let p = problem(
            &[
                (&[1.0, 0.0], Sense::Le, 4.0),
                (&[0.0, 2.0], Sense::Le, 12.0),
                (&[3.0, 2.0], Sense::Le, 18.0),
            ],
            &[-3.0, -5.0],
        );
        let inf = f64::INFINITY;
        let (st, tab) = Tableau::solve_cold(p, &[0.0, 0.0], &[inf, inf]);
        assert_eq!(st, LpStatus::Optimal);
        let tab = tab.unwrap();
        assert!((tab.objective() + 36.0).abs() < 1e-9);
        let x = tab.structural_values();
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn phase_one_with_equalities_and_ge_rows() {
        // min x + y s.t. x + y >= 2, x - y = 0.5, bounds [0, 10]
        let p = problem(
            &[(&[1.0, 1.0], Sense::Ge, 2.0), (&[1.0, -1.0], Sense::Eq, 0.5)],
            &[1.0, 1.0],
        );
        let (st, tab) = Tableau::solve_cold(p, &[0.0, 0.0], &[10.0, 10.0]);
        assert_eq!(st, LpStatus::Optimal);
        let tab = tab.unwrap();
        assert!((tab.objective() - 2.0).abs() < 1e-9);
        assert!(tab.max_violation() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let p = problem(&[(&[1.0], Sense::Ge, 1.0), (&[1.0], Sense::Le, 0.0)], &[0.0]);
        let inf = f64::INFINITY;
        assert_eq!(Tableau::solve_cold(p, &[-inf], &[inf]).0, LpStatus::Infeasible);
        let p = problem(&[(&[1.0, -1.0], Sense::Le, 1.0)], &[-1.0, 0.0]);
        assert_eq!(
            Tableau::solve_cold(p, &[0.0, 0.0], &[inf, inf]).0,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn dual_resolve_after_tightening() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6 ; LP optimum (1.6, 1.2)
        let p = problem(
            &[(&[1.0, 2.0], Sense::Le, 4.0), (&[3.0, 1.0], Sense::Le, 6.0)],
            &[-1.0, -1.0],
        );
        let (st, tab) = Tableau::solve_cold(p.clone(), &[0.0, 0.0], &[10.0, 10.0]);
        assert_eq!(st, LpStatus::Optimal);
        let mut tab = tab.unwrap();
        assert!((tab.objective() + 2.8).abs() < 1e-9);
        tab.set_bounds(0, 0.0, 1.0);
        assert_eq!(tab.resolve(), LpStatus::Optimal);
        // x = 1 -> y = 1.5 -> 2.5
        assert!((tab.objective() + 2.5).abs() < 1e-9);
        let (_, cold) = Tableau::solve_cold(p, &[0.0, 0.0], &[1.0, 10.0]);
        assert!((cold.unwrap().objective() - tab.objective()).abs() < 1e-9);
        tab.set_bounds(1, 3.0, 10.0);
        assert_eq!(tab.resolve(), LpStatus::Infeasible);
    }

    #[test]
    fn free_variables() {
        // min x s.t. x - y >= -3, x + y >= 1, x,y free -> x = -1 at y = 2
        let p = problem(
            &[(&[1.0, -1.0], Sense::Ge, -3.0), (&[1.0, 1.0], Sense::Ge, 1.0)],
            &[1.0, 0.0],
        );
        let inf = f64::INFINITY;
        let (st, tab) = Tableau::solve_cold(p, &[-inf, -inf], &[inf, inf]);
        assert_eq!(st, LpStatus::Optimal);
        assert!((tab.unwrap().objective() + 1.0).abs() < 1e-9);
    }
}
