//! Polytope representations and convex hulls.
//!
//! [`HPolytope`] is the inequality form `A·x + B·y ≤ c` of a feasible region
//! with a designated block of coordination variables `x`. [`VRep`] is the
//! vertex form of a polytope in `x`-space together with the irredundant
//! facets of its convex hull.

mod hull;
pub(crate) mod linalg;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus};

pub use hull::{build_hull, insert_vertices};
pub(crate) use hull::{lex_cmp, HullEngine};

/// Feasibility tolerance shared with the LP layer.
pub const TAU_FEAS: f64 = 1e-8;

/// Tolerance under which two vertices are the same point.
pub fn tau_dup(v: &[f64]) -> f64 {
    1e-7 * (1.0 + inf_norm(v))
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn same_point(a: &[f64], b: &[f64]) -> bool {
    let tol = tau_dup(a).max(tau_dup(b));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Whether every point of each set lies within `tol` (max norm) of a point
/// of the other.
pub fn same_vertex_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    let near = |p: &Vec<f64>, q: &Vec<f64>| p.len() == q.len() && p.iter().zip(q).all(|(x, y)| (x - y).abs() <= tol);
    a.iter().all(|p| b.iter().any(|q| near(p, q))) && b.iter().all(|q| a.iter().any(|p| near(p, q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Index of points by a fixed linear functional, for [`same_point`] lookups
/// without a linear scan. Points themselves live with the caller.
#[derive(Debug, Clone, Default)]
pub(crate) struct PointIndex {
    keys: BTreeMap<Key, Vec<usize>>,
}

impl PointIndex {
    fn weight(i: usize) -> f64 {
        1.0 + 0.618_033_988_749_895 * i as f64
    }

    fn key(p: &[f64]) -> f64 {
        p.iter().enumerate().map(|(i, v)| Self::weight(i) * v).sum()
    }

    pub(crate) fn insert(&mut self, p: &[f64], id: usize) {
        self.keys.entry(Key(Self::key(p))).or_default().push(id);
    }

    /// Some stored id whose point is the same as `p`.
    pub(crate) fn find(&self, p: &[f64], points: &[Vec<f64>]) -> Option<usize> {
        let k = Self::key(p);
        let spread: f64 = (0..p.len()).map(Self::weight).sum::<f64>() * 2.0 * tau_dup(p);
        self.keys.range(Key(k - spread)..=Key(k + spread)).flat_map(|(_, ids)| ids.iter().copied()).find(|&id| same_point(&points[id], p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub num_x: usize,
    pub num_y: usize,
    /// Row-major, `rows × num_x`.
    pub a: Vec<Vec<f64>>,
    /// Row-major, `rows × num_y`.
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

impl HPolytope {
    pub fn new(num_x: usize, num_y: usize, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<f64>) -> Result<Self> {
        let p = Self { num_x, num_y, a, b, c };
        p.validate()?;
        Ok(p)
    }

    /// A system in `x` only.
    pub fn pure(a: Vec<Vec<f64>>, c: Vec<f64>) -> Result<Self> {
        let num_x = a.first().map_or(0, Vec::len);
        let b = vec![Vec::new(); a.len()];
        Self::new(num_x, 0, a, b, c)
    }

    pub fn empty(num_x: usize, num_y: usize) -> Self {
        Self { num_x, num_y, a: Vec::new(), b: Vec::new(), c: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.c.len() || self.b.len() != self.c.len() {
            return Err(Error::InvalidInput(format!(
                "row counts differ: A has {}, B has {}, c has {}",
                self.a.len(),
                self.b.len(),
                self.c.len()
            )));
        }
        for (i, (ra, rb)) in self.a.iter().zip(&self.b).enumerate() {
            if ra.len() != self.num_x || rb.len() != self.num_y {
                return Err(Error::InvalidInput(format!(
                    "row {i}: expected {} x-coefficients and {} y-coefficients, got {} and {}",
                    self.num_x,
                    self.num_y,
                    ra.len(),
                    rb.len()
                )));
            }
        }
        if self.a.iter().chain(&self.b).flatten().chain(&self.c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.c.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_x + self.num_y
    }

    pub fn push_row(&mut self, a: Vec<f64>, b: Vec<f64>, c: f64) {
        debug_assert_eq!(a.len(), self.num_x);
        debug_assert_eq!(b.len(), self.num_y);
        self.a.push(a);
        self.b.push(b);
        self.c.push(c);
    }

    /// Row `i` as one coefficient vector over `(x, y)`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut r = self.a[i].clone();
        r.extend_from_slice(&self.b[i]);
        r
    }

    /// Keeps the rows flagged `true`.
    pub fn select_rows(&self, keep: &[bool]) -> Self {
        let mut out = Self::empty(self.num_x, self.num_y);
        for i in (0..self.num_rows()).filter(|&i| keep[i]) {
            out.push_row(self.a[i].clone(), self.b[i].clone(), self.c[i]);
        }
        out
    }

    /// Largest violation `A_i·x + B_i·y − c_i` over all rows.
    pub fn max_violation(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.num_rows()).map(|i| lp::dot(&self.a[i], x) + lp::dot(&self.b[i], y) - self.c[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// LP over `z = (x, y)`, all variables free, maximizing `objective`.
    pub fn to_lp(&self, objective: Vec<f64>) -> LpProblem {
        let mut p = LpProblem::new(self.num_vars());
        p.objective = objective;
        for i in 0..self.num_rows() {
            p.add_le(lp::dense_to_sparse(&self.row(i)), self.c[i]);
        }
        p
    }

    /// Adds every row to `p`, with column `j` of `(x, y)` mapped to `vars[j]`.
    /// Rows with a single nonzero become variable bounds.
    pub fn append_to(&self, p: &mut LpProblem, vars: &[usize]) {
        assert_eq!(vars.len(), self.num_vars());
        for i in 0..self.num_rows() {
            let coeffs: Vec<(usize, f64)> = lp::dense_to_sparse(&self.row(i)).into_iter().map(|(j, v)| (vars[j], v)).collect();
            if let [(j, v)] = coeffs[..] {
                let (lo, hi) = p.bounds[j];
                let limit = self.c[i] / v;
                let (lo, hi) = if v > 0.0 { (lo, hi.min(limit)) } else { (lo.max(limit), hi) };
                // an equality written as two rows may cross by roundoff
                p.bounds[j] = if lo > hi && lo - hi <= 1e-12 * (1.0 + lo.abs()) { (hi, hi) } else { (lo, hi) };
            } else {
                p.add_le(coeffs, self.c[i]);
            }
        }
    }

    /// Whether some `y` makes `(x, y)` feasible, with the worst row residual of
    /// the best such `y`.
    pub fn x_feasibility(&self, x: &[f64]) -> Result<(bool, f64)> {
        let mut p = LpProblem::new(self.num_y + 1);
        // minimize the uniform slack s:  B·y − s ≤ c − A·x
        p.objective[self.num_y] = -1.0;
        p.set_bounds(self.num_y, -1e6, f64::INFINITY);
        for i in 0..self.num_rows() {
            let mut coeffs = lp::dense_to_sparse(&self.b[i]);
            let norm = self.a[i].iter().chain(&self.b[i]).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            coeffs.push((self.num_y, -norm));
            p.add_le(coeffs, self.c[i] - lp::dot(&self.a[i], x));
        }
        let sol = lp::solve(&p, None)?;
        match sol.status {
            LpStatus::Optimal => {
                let s = sol.z[self.num_y];
                Ok((s <= TAU_FEAS, s))
            }
            _ => Ok((false, f64::INFINITY)),
        }
    }

    /// True iff the region is nonempty and bounded.
    pub fn is_polytope(&self) -> Result<bool> {
        Ok(lp::is_bounded(&self.to_lp(vec![0.0; self.num_vars()]))?)
    }
}

/// A facet `normal·x ≤ offset`, stored with a unit-length normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    /// Normalizes `(normal, offset)`; returns `None` for a zero normal.
    pub fn new(normal: Vec<f64>, offset: f64) -> Option<Self> {
        let norm = linalg::norm(&normal);
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        Some(Self { normal: normal.iter().map(|v| v / norm).collect(), offset: offset / norm })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }
}

/// Signed distance from `point` to the facet's hyperplane; positive outside.
pub fn facet_distance(facet: &Facet, point: &[f64]) -> f64 {
    let norm = linalg::norm(&facet.normal);
    (lp::dot(&facet.normal, point) - facet.offset) / norm
}

/// Vertex representation of a polytope plus the facets of its hull.
#[derive(Clone, Serialize, Deserialize)]
pub struct VRep {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    /// Simplicial hull kept for incremental insertion.
    #[serde(skip)]
    pub(crate) engine: Option<Arc<HullEngine>>,
}

impl std::fmt::Debug for VRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VRep").field("dim", &self.dim).field("vertices", &self.vertices).field("facets", &self.facets).finish()
    }
}

impl PartialEq for VRep {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices && self.facets == other.facets
    }
}

impl VRep {
    /// A vertex list without a hull.
    pub fn from_vertices(dim: usize, vertices: Vec<Vec<f64>>) -> Self {
        Self { dim, vertices, facets: Vec::new(), engine: None }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// The facet description as `(normals, offsets)`.
    pub fn hrep(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (self.facets.iter().map(|f| f.normal.clone()).collect(), self.facets.iter().map(|f| f.offset).collect())
    }

    /// Largest facet violation of `point` (negative inside).
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        self.facets.iter().map(|f| facet_distance(f, point)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Membership test against the hull facets.
pub fn contains(hull: &VRep, point: &[f64], tol: f64) -> bool {
    hull.facets.iter().all(|f| facet_distance(f, point) <= tol)
}

#[cfg(test)]
mod tests;
