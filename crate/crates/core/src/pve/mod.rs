//! Progressive vertex enumeration.
//!
//! The projection `Φ = {x : ∃y, A·x + B·y ≤ c}` is approximated from inside
//! by the convex hull of its vertices. Each outer loop searches along the
//! outward normal of every current facet for a vertex of `Φ` beyond it; the
//! largest gap found is the loop's error metric `D`, and the loop repeats
//! until `D ≤ ε`.
//!
//! `D` only bounds the Hausdorff distance from below, so for `ε > 0` a loop
//! with `D ≤ ε` also bounds it from above before stopping: the support values
//! found along the searched normals cut out an outer polytope containing `Φ`,
//! and the farthest of its vertices from the hull bounds the distance.

mod distance;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, build_hull, facet_distance, insert_vertices, linalg, same_point, Facet, HPolytope, PointIndex, VRep};
use crate::lp::{self, Basis, LpProblem, LpStatus};

pub(crate) use distance::distance_to_polytope;

/// What to do when the projection has empty interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FlatHandling {
    /// Run in the affine hull of the projection and map the result back.
    #[default]
    Reparameterize,
    /// Fail with [`Error::FlatProjection`].
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PveConfig {
    /// Hausdorff tolerance, in the units of `x`.
    pub epsilon: f64,
    pub max_outer_loops: usize,
    pub parallel_inner: bool,
    pub flat: FlatHandling,
}

impl Default for PveConfig {
    fn default() -> Self {
        Self { epsilon: 0.0, max_outer_loops: 100, parallel_inner: false, flat: FlatHandling::Reparameterize }
    }
}

impl PveConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PveStatus {
    Converged,
    MaxLoopsReached,
}

/// Affine frame `x = origin + Σ t_i·basis_i` of a flat projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFrame {
    pub origin: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PveResult {
    pub hull: VRep,
    /// `D` per outer loop.
    pub error_trace: Vec<f64>,
    pub new_vertex_counts: Vec<usize>,
    pub outer_loops: usize,
    pub status: PveStatus,
    /// Outer loop in which each hull vertex was found (0 for initialization).
    pub vertex_loops: Vec<usize>,
    /// Number of vertex-identification LPs solved.
    pub lp_solves: usize,
    /// Set when the projection was flat and PVE ran in its affine hull.
    pub frame: Option<AffineFrame>,
    /// Certified upper bound on the Hausdorff distance between the hull and
    /// the projection; `None` if the loop limit was hit first.
    #[serde(default)]
    pub hausdorff_bound: Option<f64>,
}

impl PveResult {
    pub fn final_error(&self) -> f64 {
        self.error_trace.last().copied().unwrap_or(0.0)
    }
}

/// Threshold on the improvement ratio below which a vertex is roundoff.
pub fn tau_ir(x: &[f64]) -> f64 {
    1e-7 * (1.0 + geometry::inf_norm(x))
}

/// The vertex-identification LP of one region, shared by all searches.
struct Projector<'a> {
    region: &'a HPolytope,
    lp: LpProblem,
}

struct Found {
    x: Vec<f64>,
    h: f64,
    basis: Option<Basis>,
}

impl<'a> Projector<'a> {
    fn new(region: &'a HPolytope) -> Self {
        let lp = region.to_lp(vec![0.0; region.num_vars()]);
        Self { region, lp }
    }

    /// Tie-break objectives after `alpha`: its images under the cyclic signed
    /// shift `e_i → e_{i+1}`, `e_N → −e_1`, then the axes if those do not span.
    fn objectives(&self, alpha: &[f64]) -> Vec<Vec<f64>> {
        let nx = self.region.num_x;
        let mut dirs = vec![alpha.to_vec()];
        for _ in 1..nx {
            let prev = dirs.last().unwrap();
            let mut next = vec![0.0; nx];
            next[1..nx].copy_from_slice(&prev[..nx - 1]);
            next[0] = -prev[nx - 1];
            dirs.push(next);
        }
        if linalg::rank(&dirs, 1e-9) < nx {
            for i in 0..nx {
                let mut e = vec![0.0; nx];
                e[i] = 1.0;
                dirs.push(e);
            }
        }
        let total = self.region.num_vars();
        dirs.into_iter()
            .map(|mut d| {
                d.resize(total, 0.0);
                d
            })
            .collect()
    }

    fn identify(&self, alpha: &[f64], warm: Option<&Basis>) -> Result<Found> {
        let objectives = self.objectives(alpha);
        let sol = lp::solve_lexicographic(&self.lp, &objectives, warm)?;
        match sol.status {
            LpStatus::Optimal => {
                let x = sol.z[..self.region.num_x].to_vec();
                let h = linalg::dot(alpha, &x);
                Ok(Found { x, h, basis: sol.basis })
            }
            LpStatus::Infeasible => Err(Error::EmptyRegion),
            LpStatus::Unbounded => Err(Error::NotPolytope),
        }
    }
}

fn check_region(region: &HPolytope) -> Result<()> {
    region.validate()?;
    if region.num_x == 0 {
        return Err(Error::InvalidInput("projection needs at least one coordination variable".into()));
    }
    Ok(())
}

/// Maximizes `direction·x` over the region and returns an extreme point of
/// the projection on the optimal face, with the optimal value.
///
/// Ties on the optimal face are broken lexicographically along the cyclic
/// signed shifts of `direction`, which always lands on a vertex of `Φ`.
pub fn identify_vertex(region: &HPolytope, direction: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_region(region)?;
    if direction.len() != region.num_x || linalg::norm(direction) == 0.0 {
        return Err(Error::InvalidInput("search direction must be a nonzero vector over x".into()));
    }
    let found = Projector::new(region).identify(direction, None)?;
    Ok((found.x, found.h))
}

struct Init {
    vertices: Vec<Vec<f64>>,
    bases: Vec<Option<Basis>>,
    solves: usize,
}

fn push_unique(init: &mut Init, found: Found) {
    if !init.vertices.iter().any(|v| same_point(v, &found.x)) {
        init.vertices.push(found.x);
        init.bases.push(found.basis);
    }
}

/// Axis searches, completed by searches orthogonal to the span found so far
/// until the vertices are full-dimensional or the projection is shown flat.
fn initialize(proj: &Projector) -> Result<Init> {
    let nx = proj.region.num_x;
    let mut init = Init { vertices: Vec::new(), bases: Vec::new(), solves: 0 };
    for i in 0..nx {
        for s in [1.0, -1.0] {
            let mut alpha = vec![0.0; nx];
            alpha[i] = s;
            let found = proj.identify(&alpha, None)?;
            init.solves += 1;
            push_unique(&mut init, found);
        }
    }
    loop {
        let (origin, basis) = linalg::affine_hull(&init.vertices, aff_tol(&init.vertices));
        if basis.len() == nx {
            return Ok(init);
        }
        let mut grew = false;
        for w in linalg::orthogonal_complement(&basis, nx) {
            let level = linalg::dot(&w, &origin);
            for s in [1.0, -1.0] {
                let alpha: Vec<f64> = w.iter().map(|v| s * v).collect();
                let found = proj.identify(&alpha, None)?;
                init.solves += 1;
                if (found.h - s * level).abs() > tau_ir(&found.x) {
                    push_unique(&mut init, found);
                    grew = true;
                    break;
                }
            }
            if grew {
                break;
            }
        }
        if !grew {
            return Err(Error::FlatProjection { affine_dim: basis.len(), origin, affine_basis: basis });
        }
    }
}

fn aff_tol(points: &[Vec<f64>]) -> f64 {
    1e-7 * (1.0 + points.iter().map(|p| geometry::inf_norm(p)).fold(0.0, f64::max))
}

/// Distinct vertices of the projection found by axis searches `±e_i`.
///
/// If the axis vertices span less than the full space, searches orthogonal
/// to their affine hull are added; a projection whose width is zero in some
/// direction is reported as [`Error::FlatProjection`].
pub fn initial_vertices(region: &HPolytope) -> Result<Vec<Vec<f64>>> {
    check_region(region)?;
    Ok(initialize(&Projector::new(region))?.vertices)
}

/// Projects `region` onto its coordination variables.
pub fn project(region: &HPolytope, config: &PveConfig) -> Result<PveResult> {
    check_region(region)?;
    if !(config.epsilon >= 0.0) || !config.epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be finite and nonnegative, got {}", config.epsilon)));
    }
    let proj = Projector::new(region);
    match initialize(&proj) {
        Ok(init) => run(&proj, init, config),
        Err(Error::FlatProjection { affine_dim, origin, affine_basis }) if config.flat == FlatHandling::Reparameterize => {
            log::info!("projection is flat (dimension {affine_dim}); running in its affine hull");
            project_flat(region, origin, affine_basis, config)
        }
        Err(e) => Err(e),
    }
}

fn run(proj: &Projector, init: Init, config: &PveConfig) -> Result<PveResult> {
    let nx = proj.region.num_x;
    let Init { mut vertices, mut bases, solves } = init;
    let mut lp_solves = solves;
    let mut found_loop = vec![0usize; vertices.len()];
    let mut hull = build_hull(&vertices, nx)?;
    let mut known = PointIndex::default();
    for (i, v) in vertices.iter().enumerate() {
        known.insert(v, i);
    }
    let mut error_trace = Vec::new();
    let mut new_vertex_counts = Vec::new();
    let mut searched: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();

    if nx == 1 {
        error_trace.push(0.0);
        new_vertex_counts.push(0);
        return Ok(finish(hull, error_trace, new_vertex_counts, Some(0.0), &vertices, &found_loop, lp_solves, None));
    }

    let mut bound = None;
    for k in 1..=config.max_outer_loops {
        let facets = hull.facets.clone();
        // a facet kept from the previous loop has the same lexicographic optimum
        let pending: Vec<usize> = (0..facets.len()).filter(|&j| !searched.contains_key(&facet_key(&facets[j]))).collect();
        // warm start from the first known vertex on each facet
        let seeds: Vec<Option<&Basis>> = pending
            .iter()
            .map(|&j| vertices.iter().position(|v| facet_distance(&facets[j], v).abs() <= tau_ir(v)).and_then(|i| bases[i].as_ref()))
            .collect();
        let search = |i: usize| proj.identify(&facets[pending[i]].normal, seeds[i]);
        let results: Vec<Result<Found>> = if config.parallel_inner {
            (0..pending.len()).into_par_iter().map(search).collect()
        } else {
            (0..pending.len()).map(search).collect()
        };
        lp_solves += pending.len();

        let mut gaps = Vec::new();
        let mut fresh = Vec::new();
        let mut next = HashMap::with_capacity(facets.len());
        let mut results = results.into_iter();
        for facet in &facets {
            let key = facet_key(facet);
            if let Some(x) = searched.get(&key) {
                next.insert(key, x.clone());
                continue;
            }
            let found = results.next().expect("one result per pending facet")?;
            let ir = facet_distance(facet, &found.x);
            next.insert(key, found.x.clone());
            if ir > tau_ir(&found.x) && known.find(&found.x, &vertices).is_none() {
                known.insert(&found.x, vertices.len());
                gaps.push(ir);
                fresh.push(found.x.clone());
                vertices.push(found.x);
                bases.push(found.basis);
                found_loop.push(k);
            }
        }
        let supports: Vec<f64> = facets.iter().map(|f| linalg::dot(&f.normal, &next[&facet_key(f)])).collect();
        searched = next;
        let d = gaps.iter().copied().fold(0.0, f64::max);
        log::debug!("outer loop {k}: {} facets, {} new vertices, D = {d:e}", facets.len(), fresh.len());
        error_trace.push(d);
        new_vertex_counts.push(fresh.len());
        if !fresh.is_empty() {
            hull = insert_vertices(&hull, &fresh)?;
        }
        if fresh.is_empty() {
            bound = Some(0.0);
            break;
        }
        if d <= config.epsilon {
            let u = outer_gap(&facets, &supports, &hull);
            log::debug!("outer loop {k}: certified bound {u:e}");
            if u <= config.epsilon {
                bound = Some(u);
                break;
            }
        }
    }
    Ok(finish(hull, error_trace, new_vertex_counts, bound, &vertices, &found_loop, lp_solves, None))
}

/// Hausdorff distance from `{x : f_j.normal·x ≤ supports_j}` to `hull`,
/// infinite if its vertices cannot be enumerated.
fn outer_gap(facets: &[Facet], supports: &[f64], hull: &VRep) -> f64 {
    let normals = facets.iter().map(|f| f.normal.clone()).collect();
    let Ok(outer) = HPolytope::pure(normals, supports.to_vec()) else { return f64::INFINITY };
    let corners = crate::fme::enumerate_vertices(&outer);
    if corners.is_empty() {
        return f64::INFINITY;
    }
    let start = &hull.vertices[0];
    corners.iter().map(|w| distance_to_polytope(&hull.facets, start, w)).fold(0.0, f64::max)
}

fn facet_key(f: &Facet) -> Vec<u64> {
    f.normal.iter().chain([&f.offset]).map(|v| v.to_bits()).collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    hull: VRep,
    error_trace: Vec<f64>,
    new_vertex_counts: Vec<usize>,
    hausdorff_bound: Option<f64>,
    vertices: &[Vec<f64>],
    found_loop: &[usize],
    lp_solves: usize,
    frame: Option<AffineFrame>,
) -> PveResult {
    let mut index = PointIndex::default();
    for (i, v) in vertices.iter().enumerate() {
        index.insert(v, i);
    }
    let vertex_loops = hull.vertices.iter().map(|hv| index.find(hv, vertices).map_or(0, |i| found_loop[i])).collect();
    PveResult {
        outer_loops: error_trace.len(),
        hull,
        error_trace,
        new_vertex_counts,
        status: if hausdorff_bound.is_some() { PveStatus::Converged } else { PveStatus::MaxLoopsReached },
        vertex_loops,
        lp_solves,
        frame,
        hausdorff_bound,
    }
}

/// PVE in the coordinates `t` of `x = origin + U·t`, mapped back to `x`.
fn project_flat(region: &HPolytope, origin: Vec<f64>, basis: Vec<Vec<f64>>, config: &PveConfig) -> Result<PveResult> {
    let nx = region.num_x;
    let k = basis.len();
    let complement = linalg::orthogonal_complement(&basis, nx);
    let mut facets: Vec<Facet> = Vec::new();
    for w in &complement {
        let level = linalg::dot(w, &origin);
        facets.push(Facet { normal: w.clone(), offset: level });
        facets.push(Facet { normal: w.iter().map(|v| -v).collect(), offset: -level });
    }
    let frame = AffineFrame { origin: origin.clone(), basis: basis.clone() };

    if k == 0 {
        facets.sort_by(|a, b| geometry::lex_cmp(&a.normal, &b.normal));
        let hull = VRep { dim: nx, vertices: vec![origin.clone()], facets, engine: None };
        return Ok(finish(hull, vec![0.0], vec![0], Some(0.0), &[origin], &[0], 2 * nx, Some(frame)));
    }

    let mut reduced = HPolytope::empty(k, region.num_y);
    for i in 0..region.num_rows() {
        let a: Vec<f64> = basis.iter().map(|u| linalg::dot(&region.a[i], u)).collect();
        reduced.push_row(a, region.b[i].clone(), region.c[i] - linalg::dot(&region.a[i], &origin));
    }
    let inner = project(&reduced, &PveConfig { flat: FlatHandling::Report, ..config.clone() })?;

    let lift = |t: &[f64]| -> Vec<f64> {
        let mut x = origin.clone();
        for (ti, u) in t.iter().zip(&basis) {
            x.iter_mut().zip(u).for_each(|(xv, uv)| *xv += ti * uv);
        }
        x
    };
    let vertices: Vec<Vec<f64>> = inner.hull.vertices.iter().map(|t| lift(t)).collect();
    for f in &inner.hull.facets {
        let mut normal = vec![0.0; nx];
        for (ni, u) in f.normal.iter().zip(&basis) {
            normal.iter_mut().zip(u).for_each(|(n, uv)| *n += ni * uv);
        }
        let offset = f.offset + linalg::dot(&normal, &origin);
        facets.push(Facet { normal, offset });
    }
    facets.sort_by(|a, b| geometry::lex_cmp(&a.normal, &b.normal).then(a.offset.total_cmp(&b.offset)));
    let hull = VRep { dim: nx, vertices, facets, engine: None };
    Ok(PveResult { hull, frame: Some(frame), lp_solves: inner.lp_solves, ..inner })
}

/// Hausdorff distance from `reference` to `candidate`: the largest distance
/// from a vertex of `reference` to the polytope `candidate`.
///
/// When `candidate ⊆ reference` this is the full Hausdorff distance between
/// the two polytopes.
pub fn hausdorff_error(candidate: &VRep, reference: &VRep) -> f64 {
    let Some(start) = candidate.vertices.first() else { return f64::INFINITY };
    reference.vertices.iter().map(|v| distance_to_polytope(&candidate.facets, start, v)).fold(0.0, f64::max)
}

/// Largest support gap of `reference` over the facets of `candidate`: what
/// one more outer loop would report as `D` if `reference` were the region.
pub fn support_gap(candidate: &VRep, reference: &VRep) -> f64 {
    candidate
        .facets
        .iter()
        .map(|f| reference.vertices.iter().map(|v| facet_distance(f, v)).fold(f64::NEG_INFINITY, f64::max))
        .fold(0.0, f64::max)
}
