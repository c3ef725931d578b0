use super::{LpError, LpProblem, LpStatus};

/// Primal feasibility tolerance on scaled rows.
const TOL_PRIMAL: f64 = 1e-9;
/// Reduced-cost tolerance, relative to the largest objective coefficient.
const TOL_DUAL: f64 = 1e-9;
/// Smallest pivot magnitude accepted by the ratio test.
const TOL_PIVOT: f64 = 1e-9;
/// Entries below this are flushed to zero after a pivot.
const TOL_DROP: f64 = 1e-14;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Feasible,
    Infeasible,
}

/// The part of a tableau worth keeping between solves.
#[derive(Clone)]
pub(crate) struct TableauState {
    m: usize,
    n: usize,
    /// `(m + 1) × (n + 1)`, row-major. Row `i < m` expresses basic variable
    /// `basic[i]` as `a[i][n] + Σ_k a[i][k]·x_{nonbasic[k]}`; row `m` is the
    /// objective in the same form. Column `n` holds the constants.
    a: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    value: Vec<f64>,
}

impl TableauState {
    pub(crate) fn basic(&self) -> &[usize] {
        &self.basic
    }
}

pub(crate) struct Tableau {
    st: TableauState,
    width: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    cost_scale: f64,
    frozen: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
    bland: bool,
}

enum Step {
    /// Entering variable runs to its opposite bound; no basis change.
    Flip(f64),
    /// Entering variable replaces the basic variable of row `r` after moving `t`.
    Pivot {
        row: usize,
        t: f64,
        leave_at: f64,
    },
    Unbounded,
}

impl Tableau {
    pub(crate) fn new(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let m = problem.num_rows();
        let width = n + 1;
        let (lo, hi) = scaled_bounds(problem);
        let mut a = vec![0.0; (m + 1) * width];
        for (i, row) in problem.rows.iter().enumerate() {
            let s = row_scale(row);
            for &(j, v) in &row.coeffs {
                a[i * width + j] += v * s;
            }
        }
        let mut value = vec![0.0; n + m];
        for j in 0..n {
            value[j] = if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            };
        }
        let st = TableauState { m, n, a, basic: (n..n + m).collect(), nonbasic: (0..n).collect(), value };
        let mut tab = Self::with_state(st, lo, hi);
        tab.recompute_basic_values();
        tab
    }

    pub(crate) fn from_state(problem: &LpProblem, state: &TableauState) -> Self {
        let (lo, hi) = scaled_bounds(problem);
        Self::with_state(state.clone(), lo, hi)
    }

    fn with_state(st: TableauState, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let total = st.n + st.m;
        let width = st.n + 1;
        let max_iterations = 50 * (st.m + st.n) + 5000;
        Self {
            st,
            width,
            lo,
            hi,
            cost: vec![0.0; total],
            cost_scale: 1.0,
            frozen: vec![false; total],
            iterations: 0,
            max_iterations,
            degenerate_run: 0,
            bland: false,
        }
    }

    pub(crate) fn into_state(self) -> TableauState {
        self.st
    }

    pub(crate) fn iterations(&self) -> usize {
        self.iterations
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        self.st.value[..self.st.n].to_vec()
    }

    pub(crate) fn value(&self, var: usize) -> f64 {
        self.st.value[var]
    }

    pub(crate) fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lo[var], self.hi[var])
    }

    /// Changes bounds of a variable (scaled units for logicals). A nonbasic
    /// variable outside the new range is clamped into it and the basics follow.
    pub(crate) fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.lo[var] = lo;
        self.hi[var] = hi;
        if let Some(k) = self.st.nonbasic.iter().position(|&q| q == var) {
            let v = self.st.value[var];
            let target = v.clamp(lo, hi);
            if target != v {
                self.move_nonbasic(k, target - v);
            }
        }
    }

    /// Installs an objective over all `n + m` variables (logicals included).
    pub(crate) fn set_cost_full(&mut self, cost: Vec<f64>) {
        debug_assert_eq!(cost.len(), self.st.n + self.st.m);
        self.cost_scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        self.cost = cost;
        self.rebuild_objective_row();
    }

    fn set_structural_cost(&mut self, obj: &[f64]) {
        let mut cost = vec![0.0; self.st.n + self.st.m];
        cost[..self.st.n].copy_from_slice(obj);
        self.set_cost_full(cost);
    }

    fn rebuild_objective_row(&mut self) {
        let (m, n, w) = (self.st.m, self.st.n, self.width);
        let mut row = vec![0.0; w];
        for (k, &q) in self.st.nonbasic.iter().enumerate() {
            row[k] = self.cost[q];
        }
        for i in 0..m {
            let c = self.cost[self.st.basic[i]];
            if c != 0.0 {
                let src = &self.st.a[i * w..(i + 1) * w];
                for (r, &v) in row.iter_mut().zip(src) {
                    *r += c * v;
                }
            }
        }
        let _ = n;
        self.st.a[m * w..(m + 1) * w].copy_from_slice(&row);
    }

    /// Recomputes basic values from the constants column and the nonbasic values.
    pub(crate) fn recompute_basic_values(&mut self) {
        let (m, n, w) = (self.st.m, self.st.n, self.width);
        let xn: Vec<f64> = self.st.nonbasic.iter().map(|&q| self.st.value[q]).collect();
        for i in 0..m {
            let row = &self.st.a[i * w..(i + 1) * w];
            let mut v = row[n];
            for (k, &x) in xn.iter().enumerate() {
                if x != 0.0 {
                    v += row[k] * x;
                }
            }
            self.st.value[self.st.basic[i]] = v;
        }
    }

    fn infeasibility(&self, var: usize) -> f64 {
        let v = self.st.value[var];
        (self.lo[var] - v).max(v - self.hi[var]).max(0.0)
    }

    fn max_basic_infeasibility(&self) -> f64 {
        self.st.basic.iter().map(|&b| self.infeasibility(b)).fold(0.0, f64::max)
    }

    pub(crate) fn optimize_lexicographic(&mut self, objectives: &[Vec<f64>]) -> Result<LpStatus, LpError> {
        if self.phase1()? == Stage::Infeasible {
            return Ok(LpStatus::Infeasible);
        }
        for (s, obj) in objectives.iter().enumerate() {
            self.set_structural_cost(obj);
            match self.phase2()? {
                LpStatus::Optimal => {}
                LpStatus::Unbounded if s == 0 => return Ok(LpStatus::Unbounded),
                LpStatus::Unbounded => break,
                LpStatus::Infeasible => return Ok(LpStatus::Infeasible),
            }
            if s + 1 < objectives.len() {
                self.freeze_nonzero_reduced_costs();
            }
        }
        self.frozen.iter_mut().for_each(|f| *f = false);
        self.push_free_nonbasics();
        self.recompute_basic_values();
        Ok(LpStatus::Optimal)
    }

    fn freeze_nonzero_reduced_costs(&mut self) {
        let (m, w) = (self.st.m, self.width);
        let tol = TOL_DUAL * self.cost_scale;
        for k in 0..self.st.n {
            if self.st.a[m * w + k].abs() > tol {
                self.frozen[self.st.nonbasic[k]] = true;
            }
        }
    }

    /// Drives the basics into their bounds. Returns `Stage::Infeasible` if the
    /// total infeasibility cannot be reduced further.
    pub(crate) fn phase1(&mut self) -> Result<Stage, LpError> {
        let (m, n, w) = (self.st.m, self.st.n, self.width);
        let mut d = vec![0.0; n];
        let mut restarted = false;
        loop {
            self.tick()?;
            d.iter_mut().for_each(|x| *x = 0.0);
            let mut any = false;
            for i in 0..m {
                let b = self.st.basic[i];
                let v = self.st.value[b];
                let weight = if v < self.lo[b] - TOL_PRIMAL {
                    1.0
                } else if v > self.hi[b] + TOL_PRIMAL {
                    -1.0
                } else {
                    continue;
                };
                any = true;
                let row = &self.st.a[i * w..i * w + n];
                for (dk, &a) in d.iter_mut().zip(row) {
                    *dk += weight * a;
                }
            }
            if !any {
                if restarted {
                    return Ok(Stage::Feasible);
                }
                // Clear accumulated drift once before declaring feasibility.
                self.recompute_basic_values();
                restarted = true;
                if self.max_basic_infeasibility() <= TOL_PRIMAL {
                    return Ok(Stage::Feasible);
                }
                continue;
            }
            restarted = false;
            let Some((k, dir)) = self.choose_entering(&d, TOL_DUAL) else {
                self.recompute_basic_values();
                if self.max_basic_infeasibility() <= TOL_PRIMAL {
                    return Ok(Stage::Feasible);
                }
                return Ok(Stage::Infeasible);
            };
            match self.ratio_test(k, dir, true) {
                Step::Unbounded => {
                    return Err(LpError::NumericalFailure {
                        iterations: self.iterations,
                        reason: "phase-one direction without breakpoint".into(),
                    })
                }
                step => self.apply(k, dir, step),
            }
        }
    }

    pub(crate) fn phase2(&mut self) -> Result<LpStatus, LpError> {
        let (m, n, w) = (self.st.m, self.st.n, self.width);
        let mut verified = false;
        loop {
            self.tick()?;
            let d: Vec<f64> = self.st.a[m * w..m * w + n].to_vec();
            let Some((k, dir)) = self.choose_entering(&d, TOL_DUAL * self.cost_scale) else {
                if verified {
                    return Ok(LpStatus::Optimal);
                }
                self.recompute_basic_values();
                if self.max_basic_infeasibility() > 10.0 * TOL_PRIMAL {
                    if self.phase1()? == Stage::Infeasible {
                        return Ok(LpStatus::Infeasible);
                    }
                    continue;
                }
                self.rebuild_objective_row();
                verified = true;
                continue;
            };
            verified = false;
            match self.ratio_test(k, dir, false) {
                Step::Unbounded => return Ok(LpStatus::Unbounded),
                step => self.apply(k, dir, step),
            }
        }
    }

    /// Maximizes the current cost but stops as soon as `watch` exceeds
    /// `threshold`. Returns true if the threshold was exceeded.
    pub(crate) fn phase2_until(&mut self, watch: usize, threshold: f64) -> Result<Option<bool>, LpError> {
        let (m, n, w) = (self.st.m, self.st.n, self.width);
        loop {
            if self.st.value[watch] > threshold {
                return Ok(Some(true));
            }
            self.tick()?;
            let d: Vec<f64> = self.st.a[m * w..m * w + n].to_vec();
            let Some((k, dir)) = self.choose_entering(&d, TOL_DUAL * self.cost_scale) else {
                self.recompute_basic_values();
                return Ok(Some(self.st.value[watch] > threshold));
            };
            match self.ratio_test(k, dir, false) {
                Step::Unbounded => return Ok(Some(true)),
                step => self.apply(k, dir, step),
            }
        }
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(LpError::NumericalFailure { iterations: self.iterations, reason: "iteration limit reached".into() });
        }
        Ok(())
    }

    fn choose_entering(&self, d: &[f64], tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for (k, &dk) in d.iter().enumerate() {
            let q = self.st.nonbasic[k];
            if self.frozen[q] {
                continue;
            }
            let v = self.st.value[q];
            let dir = if dk > tol && v < self.hi[q] {
                1.0
            } else if dk < -tol && v > self.lo[q] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                if best.is_none_or(|(bk, _)| q < self.st.nonbasic[bk]) {
                    best = Some((k, dir));
                }
            } else if dk.abs() > best_score {
                best_score = dk.abs();
                best = Some((k, dir));
            }
        }
        best
    }

    /// Harris two-pass ratio test for moving nonbasic column `k` in direction `dir`.
    fn ratio_test(&self, k: usize, dir: f64, phase1: bool) -> Step {
        let (m, w) = (self.st.m, self.width);
        let q = self.st.nonbasic[k];
        let v = self.st.value[q];
        let flip_limit = if dir > 0.0 { self.hi[q] - v } else { v - self.lo[q] };

        // (row, alpha, exact ratio, relaxed ratio, bound hit)
        let mut cands: Vec<(usize, f64, f64, f64, f64)> = Vec::new();
        for i in 0..m {
            let alpha = self.st.a[i * w + k] * dir;
            if alpha.abs() <= TOL_PIVOT {
                continue;
            }
            let b = self.st.basic[i];
            let v = self.st.value[b];
            let (lo, hi) = (self.lo[b], self.hi[b]);
            let bound = if phase1 && v < lo - TOL_PRIMAL {
                if alpha > 0.0 {
                    lo
                } else {
                    continue;
                }
            } else if phase1 && v > hi + TOL_PRIMAL {
                if alpha < 0.0 {
                    hi
                } else {
                    continue;
                }
            } else if alpha > 0.0 {
                hi
            } else {
                lo
            };
            if !bound.is_finite() {
                continue;
            }
            let gap = (bound - v) / alpha;
            let relaxed = (bound + alpha.signum() * TOL_PRIMAL - v) / alpha;
            cands.push((i, alpha, gap.max(0.0), relaxed.max(0.0), bound));
        }

        if self.bland {
            let t_min = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            if !t_min.is_finite() && !flip_limit.is_finite() {
                return Step::Unbounded;
            }
            if flip_limit <= t_min {
                return Step::Flip(flip_limit);
            }
            if !t_min.is_finite() {
                return Step::Unbounded;
            }
            let tie = 1e-12 * (1.0 + t_min);
            let pick = cands.iter().filter(|c| c.2 <= t_min + tie).min_by_key(|c| self.st.basic[c.0]).expect("nonempty");
            return Step::Pivot { row: pick.0, t: pick.2, leave_at: pick.4 };
        }

        let t_max = cands.iter().map(|c| c.3).fold(f64::INFINITY, f64::min);
        if !t_max.is_finite() && !flip_limit.is_finite() {
            return Step::Unbounded;
        }
        if flip_limit <= t_max {
            return Step::Flip(flip_limit);
        }
        if !t_max.is_finite() {
            return Step::Unbounded;
        }
        let pick = cands
            .iter()
            .filter(|c| c.2 <= t_max)
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap().then(y.0.cmp(&x.0)))
            .expect("nonempty");
        Step::Pivot { row: pick.0, t: pick.2, leave_at: pick.4 }
    }

    fn apply(&mut self, k: usize, dir: f64, step: Step) {
        match step {
            Step::Flip(t) => {
                let q = self.st.nonbasic[k];
                let target = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                let delta = target - self.st.value[q];
                self.move_nonbasic(k, delta);
                self.note_progress(t);
            }
            Step::Pivot { row, t, leave_at } => {
                self.move_nonbasic(k, dir * t);
                let leaving = self.st.basic[row];
                self.st.value[leaving] = leave_at;
                self.pivot(row, k);
                self.note_progress(t);
            }
            Step::Unbounded => unreachable!(),
        }
    }

    fn note_progress(&mut self, t: f64) {
        if t <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    fn move_nonbasic(&mut self, k: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let w = self.width;
        let q = self.st.nonbasic[k];
        self.st.value[q] += delta;
        for i in 0..self.st.m {
            let a = self.st.a[i * w + k];
            if a != 0.0 {
                let b = self.st.basic[i];
                self.st.value[b] += a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let (m, w) = (self.st.m, self.width);
        let a = &mut self.st.a;
        let piv = a[r * w + k];
        let inv = 1.0 / piv;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        for j in 0..w {
            let idx = r * w + j;
            if j == k {
                a[idx] = inv;
            } else if a[idx] != 0.0 {
                a[idx] *= -inv;
                nz.push((j, a[idx]));
            }
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = a[i * w + k];
            if f == 0.0 {
                continue;
            }
            let base = i * w;
            for &(j, pj) in &nz {
                let x = a[base + j] + f * pj;
                a[base + j] = if x.abs() < TOL_DROP { 0.0 } else { x };
            }
            a[base + k] = f * inv;
        }
        std::mem::swap(&mut self.st.basic[r], &mut self.st.nonbasic[k]);
    }

    /// Moves every free nonbasic structural variable into the basis along a
    /// zero-cost direction so that the final point is a basic solution.
    fn push_free_nonbasics(&mut self) {
        for k in 0..self.st.n {
            let q = self.st.nonbasic[k];
            if self.lo[q].is_finite() || self.hi[q].is_finite() {
                continue;
            }
            for dir in [1.0, -1.0] {
                let saved = self.bland;
                self.bland = false;
                let step = self.ratio_test(k, dir, false);
                self.bland = saved;
                if let Step::Pivot { .. } = step {
                    self.apply(k, dir, step);
                    break;
                }
            }
        }
    }
}

fn row_scale(row: &super::Row) -> f64 {
    let mx = row.coeffs.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
    if mx > 0.0 {
        1.0 / mx
    } else {
        1.0
    }
}

/// Bounds for all `n + m` variables, logical bounds scaled with their rows.
fn scaled_bounds(problem: &LpProblem) -> (Vec<f64>, Vec<f64>) {
    let n = problem.num_vars();
    let m = problem.num_rows();
    let mut lo = Vec::with_capacity(n + m);
    let mut hi = Vec::with_capacity(n + m);
    for &(l, h) in &problem.bounds {
        lo.push(l);
        hi.push(h);
    }
    for row in &problem.rows {
        let s = row_scale(row);
        lo.push(row.lo * s);
        hi.push(row.hi * s);
    }
    (lo, hi)
}
