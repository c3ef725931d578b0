//! Redundant-row detection and boundedness checks on a single tableau.

use super::simplex::{Stage, Tableau};
use super::{LpError, LpProblem, LpStatus};
use crate::error::{Error, Result};
use crate::geometry::HPolytope;

/// Scaled slack above which a relaxed row counts as binding.
const TOL_BINDING: f64 = 1e-9;

/// Flags the `≤` rows of `problem` that can be dropped without changing the
/// feasible set. Returns `None` if the problem is infeasible.
///
/// Rows are tested in order against the rows kept so far plus every later
/// row: row `i` is relaxed by one (scaled) unit and its activity maximized;
/// if the maximum stays at the original bound the row is implied and is
/// removed for good. Equalities, ranges and `≥` rows are always kept.
pub fn remove_redundant_rows(problem: &LpProblem) -> Result<Option<Vec<bool>>, LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    let m = problem.num_rows();
    let mut tab = Tableau::new(problem);
    if tab.phase1()? == Stage::Infeasible {
        return Ok(None);
    }
    let mut keep = vec![true; m];
    let mut cost = vec![0.0; n + m];
    for i in 0..m {
        let row = &problem.rows[i];
        if row.lo.is_finite() || !row.hi.is_finite() {
            continue;
        }
        let var = n + i;
        let (lo, hi) = tab.bounds(var);
        tab.set_bounds(var, lo, hi + 1.0);
        cost[var] = 1.0;
        tab.set_cost_full(cost.clone());
        cost[var] = 0.0;
        let binding = tab.phase2_until(var, hi + TOL_BINDING)?.unwrap_or(true);
        if binding {
            tab.set_bounds(var, lo, hi);
            if tab.value(var) > hi {
                tab.recompute_basic_values();
            }
            if tab.phase1()? == Stage::Infeasible {
                return Err(LpError::NumericalFailure {
                    iterations: tab.iterations(),
                    reason: "lost feasibility while restoring a row".into(),
                });
            }
        } else {
            keep[i] = false;
            tab.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
        }
    }
    Ok(Some(keep))
}

/// Irredundant subsystem of `h`, preserving row order.
pub fn remove_redundant(h: &HPolytope) -> Result<HPolytope> {
    h.validate()?;
    let lp = h.to_lp(vec![0.0; h.num_vars()]);
    match remove_redundant_rows(&lp)? {
        Some(keep) => Ok(h.select_rows(&keep)),
        None => Err(Error::EmptyRegion),
    }
}

/// True iff the feasible set is nonempty and bounded in every variable.
pub fn is_bounded(problem: &LpProblem) -> Result<bool, LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    let m = problem.num_rows();
    let mut tab = Tableau::new(problem);
    if tab.phase1()? == Stage::Infeasible {
        return Ok(false);
    }
    let mut cost = vec![0.0; n + m];
    for j in 0..n {
        let (lo, hi) = tab.bounds(j);
        for sign in [1.0, -1.0] {
            if (sign > 0.0 && hi.is_finite()) || (sign < 0.0 && lo.is_finite()) {
                continue;
            }
            cost[j] = sign;
            tab.set_cost_full(cost.clone());
            cost[j] = 0.0;
            if tab.phase2()? == LpStatus::Unbounded {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
