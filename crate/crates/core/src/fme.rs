//! Fourier-Motzkin elimination.
//!
//! Exact projection by eliminating internal variables one at a time; the row
//! count can grow exponentially, so it serves as a reference for small
//! instances rather than as a production method.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_hull, same_point, HPolytope, VRep};
use crate::lp;

/// Coefficients below this are treated as zero when splitting rows by sign.
pub const ZERO_TOL: f64 = 1e-10;

pub const DEFAULT_ROW_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmeResult {
    /// System in `x` only.
    pub hrep: HPolytope,
    /// Row count after each elimination step.
    pub generated_rows_per_step: Vec<usize>,
    /// Internal variables in the order they were eliminated.
    pub elimination_order: Vec<usize>,
}

/// Eliminates every internal variable with the default row cap.
pub fn eliminate(region: &HPolytope, redundancy_removal: bool) -> Result<FmeResult> {
    eliminate_with_cap(region, redundancy_removal, DEFAULT_ROW_CAP)
}

struct System {
    num_x: usize,
    /// Original indices of the internal columns still present.
    y_ids: Vec<usize>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Original rows each row was combined from, as a bitset.
    history: Vec<Vec<u64>>,
}

impl System {
    fn width(&self) -> usize {
        self.num_x + self.y_ids.len()
    }

    fn to_hpolytope(&self) -> HPolytope {
        let ny = self.y_ids.len();
        let mut h = HPolytope::empty(self.num_x, ny);
        for (r, &c) in self.rows.iter().zip(&self.rhs) {
            h.push_row(r[..self.num_x].to_vec(), r[self.num_x..].to_vec(), c);
        }
        h
    }
}

/// Scales the row to unit infinity norm; `None` for an all-zero row that
/// holds trivially.
fn normalize(mut row: Vec<f64>, mut rhs: f64) -> Option<(Vec<f64>, f64)> {
    let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= ZERO_TOL {
        // 0 ≤ rhs
        return if rhs >= -ZERO_TOL { None } else { Some((vec![0.0; row.len()], -1.0)) };
    }
    row.iter_mut().for_each(|v| {
        *v /= scale;
        if v.abs() <= ZERO_TOL * 1e-2 {
            *v = 0.0;
        }
    });
    rhs /= scale;
    Some((row, rhs))
}

fn key(row: &[f64], rhs: f64) -> Vec<i64> {
    row.iter().chain(std::iter::once(&rhs)).map(|v| (v * 1e9).round() as i64).collect()
}

fn push_unique(out: &mut System, seen: &mut HashMap<Vec<i64>, usize>, row: Vec<f64>, rhs: f64, history: Vec<u64>) {
    if let Some((row, rhs)) = normalize(row, rhs) {
        match seen.entry(key(&row, rhs)) {
            Entry::Occupied(e) => {
                let i = *e.get();
                if popcount(&history) < popcount(&out.history[i]) {
                    out.history[i] = history;
                }
            }
            Entry::Vacant(e) => {
                e.insert(out.rows.len());
                out.rows.push(row);
                out.rhs.push(rhs);
                out.history.push(history);
            }
        }
    }
}

fn popcount(bits: &[u64]) -> u32 {
    bits.iter().map(|w| w.count_ones()).sum()
}

fn union(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x | y).collect()
}

/// As [`eliminate`], failing with [`Error::RowExplosion`] once an
/// intermediate system would exceed `row_cap` rows.
pub fn eliminate_with_cap(region: &HPolytope, redundancy_removal: bool, row_cap: usize) -> Result<FmeResult> {
    region.validate()?;
    let mut sys =
        System { num_x: region.num_x, y_ids: (0..region.num_y).collect(), rows: Vec::new(), rhs: Vec::new(), history: Vec::new() };
    let words = region.num_rows().div_ceil(64).max(1);
    let mut seen = HashMap::new();
    for i in 0..region.num_rows() {
        let mut h = vec![0u64; words];
        h[i / 64] |= 1 << (i % 64);
        push_unique(&mut sys, &mut seen, region.row(i), region.c[i], h);
    }
    if redundancy_removal {
        sys = prune(sys)?;
    }
    let mut generated = Vec::new();
    let mut order = Vec::new();
    while !sys.y_ids.is_empty() {
        let nx = sys.num_x;
        // min-fill choice: fewest positive × negative pairings
        let (col, pos, neg) = (0..sys.y_ids.len())
            .map(|k| {
                let c = nx + k;
                let pos: Vec<usize> = (0..sys.rows.len()).filter(|&i| sys.rows[i][c] > ZERO_TOL).collect();
                let neg: Vec<usize> = (0..sys.rows.len()).filter(|&i| sys.rows[i][c] < -ZERO_TOL).collect();
                (k, pos, neg)
            })
            .min_by_key(|(k, p, n)| (p.len() * n.len(), *k))
            .expect("at least one internal column");
        let c = nx + col;
        let zero = sys.rows.len() - pos.len() - neg.len();
        let projected = (zero + pos.len() * neg.len()).min(row_cap);
        let mut next = System {
            num_x: nx,
            y_ids: sys.y_ids.iter().enumerate().filter(|&(k, _)| k != col).map(|(_, &v)| v).collect(),
            rows: Vec::with_capacity(projected),
            rhs: Vec::with_capacity(projected),
            history: Vec::with_capacity(projected),
        };
        // Chernikov: after k eliminations a row built from more than k + 1
        // original rows is implied by the others
        let max_history = order.len() as u32 + 2;
        let drop_col = |r: &[f64]| -> Vec<f64> { r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect() };
        let mut seen = HashMap::new();
        for i in 0..sys.rows.len() {
            if sys.rows[i][c].abs() <= ZERO_TOL {
                push_unique(&mut next, &mut seen, drop_col(&sys.rows[i]), sys.rhs[i], sys.history[i].clone());
            }
        }
        for &p in &pos {
            for &n in &neg {
                let history = union(&sys.history[p], &sys.history[n]);
                if popcount(&history) > max_history {
                    continue;
                }
                let (ap, an) = (sys.rows[p][c], -sys.rows[n][c]);
                let combined: Vec<f64> = sys.rows[p].iter().zip(&sys.rows[n]).map(|(u, v)| an * u + ap * v).collect();
                let rhs = an * sys.rhs[p] + ap * sys.rhs[n];
                push_unique(&mut next, &mut seen, drop_col(&combined), rhs, history);
                if next.rows.len() > row_cap {
                    return Err(Error::RowExplosion { rows: next.rows.len(), cap: row_cap });
                }
            }
        }
        if redundancy_removal {
            next = prune(next)?;
        }
        debug_assert_eq!(next.rows.first().map_or(next.width(), Vec::len), next.width());
        generated.push(next.rows.len());
        order.push(sys.y_ids[col]);
        sys = next;
    }
    let mut hrep = HPolytope::empty(sys.num_x, 0);
    for (r, c) in sys.rows.into_iter().zip(sys.rhs) {
        hrep.push_row(r, Vec::new(), c);
    }
    Ok(FmeResult { hrep, generated_rows_per_step: generated, elimination_order: order })
}

fn prune(sys: System) -> Result<System> {
    let h = sys.to_hpolytope();
    let p = h.to_lp(vec![0.0; h.num_vars()]);
    let keep = lp::remove_redundant_rows(&p)?.ok_or(Error::EmptyRegion)?;
    let mut out = System { num_x: sys.num_x, y_ids: sys.y_ids, rows: Vec::new(), rhs: Vec::new(), history: Vec::new() };
    for (((r, c), h), k) in sys.rows.into_iter().zip(sys.rhs).zip(sys.history).zip(keep) {
        if k {
            out.rows.push(r);
            out.rhs.push(c);
            out.history.push(h);
        }
    }
    Ok(out)
}

const MAX_REPAIRS: usize = 50;

/// The exact projection in `x` only: elimination with redundancy removal,
/// checked vertex by vertex against the region.
///
/// Chernikov's rule on top of intermediate pruning can drop a needed row,
/// leaving a system that is valid but too loose. An enumerated vertex found
/// outside the projection gets a row from [`separating_row`], and the
/// vertices are enumerated again.
pub fn exact_hrep(region: &HPolytope) -> Result<HPolytope> {
    let mut h = eliminate(region, true)?.hrep;
    for _ in 0..MAX_REPAIRS {
        let mut cuts = Vec::new();
        for v in &enumerate_vertices(&h) {
            if let Some(cut) = separating_row(region, v)? {
                cuts.push(cut);
            }
        }
        if cuts.is_empty() {
            return Ok(h);
        }
        log::debug!("exact projection: {} vertices outside the region, adding cuts", cuts.len());
        for (a, c) in cuts {
            h.push_row(a, Vec::new(), c);
        }
    }
    Err(Error::Lp(lp::LpError::NumericalFailure {
        iterations: MAX_REPAIRS,
        reason: "projection still loose after the repair rounds".into(),
    }))
}

/// [`exact_hrep`] as a hull.
pub fn exact_projection(region: &HPolytope) -> Result<VRep> {
    build_hull(&enumerate_vertices(&exact_hrep(region)?), region.num_x)
}

/// A row `a·x ≤ c` valid on the projection of `region` and violated at `x`,
/// if `x` lies outside it.
///
/// Maximizes `Σ λ_i (a_i·x + b_i·y − c_i)` over `λ ≥ 0`, `Σ λ_i = 1`,
/// `λᵀB = 0`, with rows scaled to unit norm; a positive optimum gives the
/// multiplier of a Farkas certificate.
pub fn separating_row(region: &HPolytope, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
    let m = region.num_rows();
    let scale: Vec<f64> = (0..m).map(|i| lp::dot(&region.row(i), &region.row(i)).sqrt().max(ZERO_TOL)).collect();
    let mut p = lp::LpProblem::new(m);
    for i in 0..m {
        p.set_bounds(i, 0.0, f64::INFINITY);
        p.objective[i] = (lp::dot(&region.a[i], x) - region.c[i]) / scale[i];
    }
    for k in 0..region.num_y {
        p.add_eq((0..m).filter(|&i| region.b[i][k] != 0.0).map(|i| (i, region.b[i][k] / scale[i])).collect(), 0.0);
    }
    p.add_eq((0..m).map(|i| (i, 1.0)).collect(), 1.0);
    let sol = lp::solve(&p, None)?;
    let tol = 1e-9 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    if !sol.is_optimal() || sol.objective_value <= tol {
        return Ok(None);
    }
    let mut a = vec![0.0; region.num_x];
    let mut c = 0.0;
    for i in 0..m {
        let w = sol.z[i] / scale[i];
        a.iter_mut().zip(&region.a[i]).for_each(|(s, v)| *s += w * v);
        c += w * region.c[i];
    }
    Ok(Some((a, c)))
}

/// Vertices of a bounded system in `x` only.
///
/// Small systems try every `num_x`-subset of rows as an active set; larger
/// full-dimensional ones read the vertices off the facets of the polar hull
/// taken about a Chebyshev center.
pub fn enumerate_vertices(h: &HPolytope) -> Vec<Vec<f64>> {
    let n = h.num_x;
    let m = h.num_rows();
    if m < n || n == 0 {
        return Vec::new();
    }
    let combos = (0..n).fold(1.0f64, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
    if combos > 200_000.0 {
        if let Some(v) = polar_vertices(h) {
            return v;
        }
    }
    active_set_vertices(h)
}

fn active_set_vertices(h: &HPolytope) -> Vec<Vec<f64>> {
    let n = h.num_x;
    let m = h.num_rows();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let mat = nalgebra::DMatrix::from_fn(n, n, |r, c| h.a[idx[r]][c]);
        let rhs = nalgebra::DVector::from_fn(n, |r, _| h.c[idx[r]]);
        let lu = mat.lu();
        if lu.determinant().abs() > 1e-10 {
            if let Some(x) = lu.solve(&rhs) {
                let x: Vec<f64> = x.iter().cloned().collect();
                let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let feasible = (0..m).all(|i| lp::dot(&h.a[i], &x) <= h.c[i] + 1e-9 * scale);
                if feasible && !out.iter().any(|v| same_point(v, &x)) {
                    out.push(x);
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn polar_vertices(h: &HPolytope) -> Option<Vec<Vec<f64>>> {
    let n = h.num_x;
    let mut p = lp::LpProblem::new(n + 1);
    p.objective[n] = 1.0;
    p.set_bounds(n, f64::NEG_INFINITY, 1.0);
    let mut rows = Vec::new();
    for i in 0..h.num_rows() {
        let norm = h.a[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= ZERO_TOL {
            continue;
        }
        let mut coeffs = lp::dense_to_sparse(&h.a[i]);
        coeffs.push((n, norm));
        p.add_le(coeffs, h.c[i]);
        rows.push(i);
    }
    let sol = lp::solve(&p, None).ok()?;
    if !sol.is_optimal() || sol.z[n] <= 1e-9 {
        return None;
    }
    let center = &sol.z[..n];
    let dual: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            let gap = h.c[i] - lp::dot(&h.a[i], center);
            h.a[i].iter().map(|v| v / gap).collect()
        })
        .collect();
    let hull = crate::geometry::build_hull(&dual, n).ok()?;
    Some(hull.facets.iter().map(|f| center.iter().zip(&f.normal).map(|(c, u)| c + u / f.offset).collect()).collect())
}
