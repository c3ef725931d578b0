//! Dense bounded-variable primal simplex.
//!
//! Problems are stated as `maximize c·z` subject to row activities
//! `lo_i ≤ G_i·z ≤ hi_i` and variable bounds `lo_j ≤ z_j ≤ hi_j`, with
//! infinite bounds allowed on both. Plain `G·z ≤ g` rows are the common case
//! and have a dedicated constructor.
//!
//! The solver keeps a condensed (Tucker) tableau with one column per
//! nonbasic variable, so its size is `rows × structural columns` no matter
//! how many rows are equalities or ranges. Pivots skip zero entries, which
//! keeps block-structured dispatch problems cheap. The final tableau is handed
//! back as an opaque [`Basis`] token so that a later solve of the same
//! constraint system with a different objective restarts from a primal
//! feasible basis.

mod redundancy;
mod simplex;

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use redundancy::{is_bounded, remove_redundant, remove_redundant_rows};

use simplex::{Tableau, TableauState};

/// Feasibility and optimality tolerance, absolute on rows scaled to unit
/// infinity norm.
pub const TAU_FEAS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("constraint row {row} references column {col} but the problem has {num_vars} variables")]
    ColumnOutOfRange { row: usize, col: usize, num_vars: usize },
    #[error("objective has length {got}, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
    #[error("invalid bounds on {what} {index}: [{lo}, {hi}]")]
    InvalidBounds { what: &'static str, index: usize, lo: f64, hi: f64 },
    #[error("simplex broke down after {iterations} iterations: {reason}")]
    NumericalFailure { iterations: usize, reason: String },
}

/// One sparse constraint row `lo ≤ coeffs·z ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LpProblem {
    /// Maximized.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Per-variable `[lo, hi]`.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// A problem over `num_vars` free variables with zero objective and no rows.
    pub fn new(num_vars: usize) -> Self {
        Self { objective: vec![0.0; num_vars], rows: Vec::new(), bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars] }
    }

    /// `maximize objective·z` s.t. `G·z ≤ g` and the given bounds.
    pub fn from_dense(objective: Vec<f64>, g: &[Vec<f64>], rhs: &[f64], bounds: Vec<(f64, f64)>) -> Self {
        let mut p = Self { objective, rows: Vec::with_capacity(g.len()), bounds };
        for (row, &r) in g.iter().zip(rhs) {
            p.add_le(dense_to_sparse(row), r);
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        self.rows.push(Row { coeffs, lo, hi });
        self.rows.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, f64::NEG_INFINITY, rhs)
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, rhs, f64::INFINITY)
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, rhs, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    /// Appends a fresh variable and returns its index.
    pub fn add_var(&mut self, lo: f64, hi: f64, objective: f64) -> usize {
        self.bounds.push((lo, hi));
        self.objective.push(objective);
        self.bounds.len() - 1
    }

    /// Activity `G_i·z` of row `i`.
    pub fn activity(&self, i: usize, z: &[f64]) -> f64 {
        self.rows[i].coeffs.iter().map(|&(j, v)| v * z[j]).sum()
    }

    /// Largest scaled violation of any row or bound at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let scale = row.coeffs.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs())).max(1e-300);
            let act = self.activity(i, z);
            worst = worst.max((row.lo - act) / scale).max((act - row.hi) / scale);
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - z[j]).max(z[j] - hi);
        }
        worst
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.len() != n {
            return Err(LpError::ObjectiveLength { got: self.objective.len(), expected: n });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(&(col, _)) = row.coeffs.iter().find(|&&(c, _)| c >= n) {
                return Err(LpError::ColumnOutOfRange { row: i, col, num_vars: n });
            }
            if row.lo > row.hi || row.lo.is_nan() || row.hi.is_nan() {
                return Err(LpError::InvalidBounds { what: "row", index: i, lo: row.lo, hi: row.hi });
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo > hi || lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds { what: "variable", index: j, lo, hi });
            }
        }
        Ok(())
    }

    /// Hash of everything except the objective; identifies the constraint
    /// system a [`Basis`] belongs to.
    fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.bounds.len().hash(&mut h);
        self.rows.len().hash(&mut h);
        for &(lo, hi) in &self.bounds {
            lo.to_bits().hash(&mut h);
            hi.to_bits().hash(&mut h);
        }
        for row in &self.rows {
            row.lo.to_bits().hash(&mut h);
            row.hi.to_bits().hash(&mut h);
            for &(j, v) in &row.coeffs {
                j.hash(&mut h);
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

pub(crate) fn dense_to_sparse(row: &[f64]) -> Vec<(usize, f64)> {
    row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (j, v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Warm-start token: the final simplex state of a solve.
///
/// Only valid for problems with an identical constraint system (rows and
/// bounds); anything else silently falls back to a cold start.
#[derive(Clone)]
pub struct Basis {
    fingerprint: u64,
    state: Arc<TableauState>,
}

impl std::fmt::Debug for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Basis").field("fingerprint", &self.fingerprint).finish_non_exhaustive()
    }
}

impl Basis {
    /// Indices (structural first, then one logical per row) of the basic variables.
    pub fn basic_variables(&self) -> &[usize] {
        self.state.basic()
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub z: Vec<f64>,
    /// Value of the (first) objective at `z`.
    pub objective_value: f64,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves the problem, returning a basic optimal solution.
pub fn solve(problem: &LpProblem, warm_start: Option<&Basis>) -> Result<LpSolution, LpError> {
    solve_lexicographic(problem, std::slice::from_ref(&problem.objective), warm_start)
}

/// Lexicographic maximization: optimizes `objectives[0]`, then `objectives[1]`
/// over the optimal face of the first, and so on.
///
/// Each later stage keeps every nonbasic variable with a nonzero reduced cost
/// in an earlier stage at its bound, which restricts the search to the exact
/// optimal face without adding rows.
pub fn solve_lexicographic(problem: &LpProblem, objectives: &[Vec<f64>], warm_start: Option<&Basis>) -> Result<LpSolution, LpError> {
    problem.validate()?;
    for obj in objectives {
        if obj.len() != problem.num_vars() {
            return Err(LpError::ObjectiveLength { got: obj.len(), expected: problem.num_vars() });
        }
    }
    let fingerprint = problem.fingerprint();
    let warm = warm_start.filter(|b| b.fingerprint == fingerprint);
    match run(problem, objectives, warm, fingerprint) {
        Err(e) if warm.is_some() => {
            log::debug!("warm start failed ({e}); retrying cold");
            run(problem, objectives, None, fingerprint)
        }
        other => other,
    }
}

fn run(problem: &LpProblem, objectives: &[Vec<f64>], warm: Option<&Basis>, fingerprint: u64) -> Result<LpSolution, LpError> {
    let mut tab = match warm {
        Some(b) => Tableau::from_state(problem, &b.state),
        None => Tableau::new(problem),
    };
    let status = tab.optimize_lexicographic(objectives)?;
    let z = tab.structural_values();
    let objective_value = objectives.first().map(|c| dot(c, &z)).unwrap_or(0.0);
    let iterations = tab.iterations();
    let basis = Some(Basis { fingerprint, state: Arc::new(tab.into_state()) });
    Ok(LpSolution { status, z, objective_value, basis, iterations })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests;
