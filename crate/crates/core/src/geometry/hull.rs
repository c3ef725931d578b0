//! Incremental quickhull in arbitrary dimension.
//!
//! The engine keeps a simplicial hull (every facet spanned by exactly `dim`
//! points) with neighbor links across ridges and an outside set per facet.
//! Points are added by removing the facets they can see and coning the
//! horizon to the new point; only facets adjacent to the visible region are
//! touched. Coplanar simplices are merged into true facets when the hull is
//! exported as a [`VRep`].

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::linalg::{self, dot, hyperplane_normal, sub};
use super::{same_point, Facet, PointIndex, VRep};
use crate::error::{Error, Result};

/// Above this dimension facet counts explode; we warn but proceed.
const WARN_DIM: usize = 8;

#[derive(Clone, Debug)]
struct Simplex {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    /// `neighbors[i]` shares the ridge `verts \ {verts[i]}`.
    neighbors: Vec<usize>,
    outside: Vec<usize>,
    alive: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct HullEngine {
    dim: usize,
    points: Vec<Vec<f64>>,
    simplices: Vec<Simplex>,
    interior: Vec<f64>,
    /// Visibility tolerance.
    eps: f64,
    /// Coplanarity tolerance used when merging simplices into facets.
    eps_merge: f64,
    queue: VecDeque<usize>,
    index: PointIndex,
}

fn scale_of(points: &[Vec<f64>]) -> f64 {
    points.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn dedup(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut index = PointIndex::default();
    for p in points {
        if index.find(p, &out).is_none() {
            index.insert(p, out.len());
            out.push(p.clone());
        }
    }
    out
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("hull dimension must be at least 1".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::InvalidInput(format!("point of length {} in a {dim}-dimensional hull", p.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite point coordinate".into()));
    }
    Ok(())
}

/// Convex hull of `points` in `R^dim`.
///
/// The returned vertices are the extreme input points in input order; facets
/// are unit-normal, outward, irredundant and sorted by normal.
pub fn build_hull(points: &[Vec<f64>], dim: usize) -> Result<VRep> {
    check_dims(points, dim)?;
    if dim > WARN_DIM {
        log::warn!("building a {dim}-dimensional hull; facet counts grow quickly above dimension {WARN_DIM}");
    }
    let pts = dedup(points);
    if dim == 1 {
        return interval_hull(&pts);
    }
    let mut engine = HullEngine::start(pts, dim)?;
    engine.run();
    Ok(engine.export())
}

/// Adds `new_points` to an existing full-dimensional hull.
///
/// Interior and duplicate points are absorbed without effect.
pub fn insert_vertices(hull: &VRep, new_points: &[Vec<f64>]) -> Result<VRep> {
    check_dims(new_points, hull.dim)?;
    if hull.dim == 1 {
        let mut all = hull.vertices.clone();
        all.extend_from_slice(new_points);
        return interval_hull(&dedup(&all));
    }
    let mut engine = match &hull.engine {
        Some(e) => Arc::clone(e),
        None => Arc::new(HullEngine::start(hull.vertices.clone(), hull.dim)?),
    };
    let eng = Arc::make_mut(&mut engine);
    let mut fresh: Vec<Vec<f64>> = Vec::new();
    for p in new_points {
        if !eng.is_known(p) && !fresh.iter().any(|q| same_point(p, q)) {
            fresh.push(p.clone());
        }
    }
    if fresh.is_empty() {
        let mut out = hull.clone();
        out.engine = Some(engine);
        return Ok(out);
    }
    eng.add_points(fresh);
    eng.run();
    Ok(eng.export())
}

fn interval_hull(pts: &[Vec<f64>]) -> Result<VRep> {
    if pts.len() < 2 {
        return Err(Error::DegenerateHull { affine_dim: 0 });
    }
    let (mut imin, mut imax) = (0, 0);
    for (i, p) in pts.iter().enumerate() {
        if p[0] < pts[imin][0] {
            imin = i;
        }
        if p[0] > pts[imax][0] {
            imax = i;
        }
    }
    let (lo, hi) = (pts[imin][0], pts[imax][0]);
    let mut idx = [imin, imax];
    idx.sort_unstable();
    Ok(VRep {
        dim: 1,
        vertices: idx.iter().map(|&i| pts[i].clone()).collect(),
        facets: vec![Facet { normal: vec![-1.0], offset: -lo }, Facet { normal: vec![1.0], offset: hi }],
        engine: None,
    })
}

impl HullEngine {
    /// Picks an initial simplex and distributes the remaining points.
    fn start(points: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        let scale = scale_of(&points);
        let eps = 1e-10 * scale;
        let eps_aff = 1e-9 * scale;
        if points.is_empty() {
            return Err(Error::DegenerateHull { affine_dim: 0 });
        }

        // greedy simplex: lowest first coordinate, then farthest from the span
        let first = (0..points.len()).min_by(|&i, &j| points[i][0].partial_cmp(&points[j][0]).unwrap().then(i.cmp(&j))).unwrap();
        let mut chosen = vec![first];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while chosen.len() < dim + 1 {
            let origin = &points[first];
            let mut best = None;
            let mut best_len = eps_aff;
            for (i, p) in points.iter().enumerate() {
                if chosen.contains(&i) {
                    continue;
                }
                let mut r = sub(p, origin);
                for _ in 0..2 {
                    for b in &basis {
                        let c = dot(&r, b);
                        r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                    }
                }
                let len = linalg::norm(&r);
                if len > best_len {
                    best_len = len;
                    best = Some((i, r));
                }
            }
            match best {
                Some((i, r)) => {
                    let len = linalg::norm(&r);
                    basis.push(r.iter().map(|x| x / len).collect());
                    chosen.push(i);
                }
                None => return Err(Error::DegenerateHull { affine_dim: chosen.len() - 1 }),
            }
        }

        let mut interior = vec![0.0; dim];
        for &i in &chosen {
            for (c, v) in interior.iter_mut().zip(&points[i]) {
                *c += v / (dim + 1) as f64;
            }
        }

        let mut engine = Self {
            dim,
            points,
            simplices: Vec::new(),
            interior,
            eps,
            eps_merge: 1e-8 * scale,
            queue: VecDeque::new(),
            index: PointIndex::default(),
        };
        for i in 0..engine.points.len() {
            engine.index.insert(&engine.points[i], i);
        }

        let mut simplex = chosen.clone();
        simplex.sort_unstable();
        // facet f omits simplex[f]
        for f in 0..=dim {
            let verts: Vec<usize> = simplex.iter().enumerate().filter(|&(i, _)| i != f).map(|(_, &v)| v).collect();
            let (normal, offset) = engine.oriented_plane(&verts).ok_or(Error::DegenerateHull { affine_dim: dim - 1 })?;
            let neighbors = verts.iter().map(|&v| simplex.iter().position(|&s| s == v).unwrap()).collect();
            engine.simplices.push(Simplex { verts, normal, offset, neighbors, outside: Vec::new(), alive: true });
        }

        let rest: Vec<usize> = (0..engine.points.len()).filter(|i| !chosen.contains(i)).collect();
        let targets: Vec<usize> = (0..=dim).collect();
        engine.assign(&rest, &targets);
        Ok(engine)
    }

    /// Whether `p` repeats a point the engine has already seen.
    fn is_known(&self, p: &[f64]) -> bool {
        self.index.find(p, &self.points).is_some()
    }

    fn add_points(&mut self, ps: Vec<Vec<f64>>) {
        let first = self.points.len();
        for p in ps {
            self.index.insert(&p, self.points.len());
            self.points.push(p);
        }
        let ids: Vec<usize> = (first..self.points.len()).collect();
        let alive: Vec<usize> = (0..self.simplices.len()).filter(|&f| self.simplices[f].alive).collect();
        self.assign(&ids, &alive);
    }

    fn distance(&self, f: usize, p: usize) -> f64 {
        let s = &self.simplices[f];
        dot(&s.normal, &self.points[p]) - s.offset
    }

    /// Puts each point into the outside set of the first target facet it sees.
    fn assign(&mut self, pts: &[usize], targets: &[usize]) {
        for &p in pts {
            if let Some(&f) = targets.iter().find(|&&f| self.distance(f, p) > self.eps) {
                if self.simplices[f].outside.is_empty() {
                    self.queue.push_back(f);
                }
                self.simplices[f].outside.push(p);
            }
        }
    }

    fn oriented_plane(&self, verts: &[usize]) -> Option<(Vec<f64>, f64)> {
        let pts: Vec<&[f64]> = verts.iter().map(|&v| self.points[v].as_slice()).collect();
        let mut normal = hyperplane_normal(&pts)?;
        let mut offset = verts.iter().map(|&v| dot(&normal, &self.points[v])).sum::<f64>() / verts.len() as f64;
        let side = dot(&normal, &self.interior) - offset;
        if side > 0.0 {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        if side.abs() <= 1e-14 * scale_of(std::slice::from_ref(&self.interior)) {
            return None;
        }
        Some((normal, offset))
    }

    fn run(&mut self) {
        while let Some(f) = self.queue.pop_front() {
            if !self.simplices[f].alive || self.simplices[f].outside.is_empty() {
                continue;
            }
            let outside = std::mem::take(&mut self.simplices[f].outside);
            let (apex_pos, _) = outside
                .iter()
                .enumerate()
                .map(|(i, &p)| (i, self.distance(f, p)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let apex = outside[apex_pos];
            self.simplices[f].outside = outside;
            self.simplices[f].outside.swap_remove(apex_pos);
            if !self.add_apex(f, apex) {
                // numerically coplanar with the horizon; treat as absorbed
                log::debug!("hull: dropping nearly coplanar point {apex}");
                if !self.simplices[f].outside.is_empty() {
                    self.queue.push_back(f);
                }
            }
        }
    }

    /// Cones the horizon seen from `apex` (which lies outside `start`).
    fn add_apex(&mut self, start: usize, apex: usize) -> bool {
        // visible region by flood fill
        let mut visible = vec![start];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(start, true);
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            for &g in &self.simplices[f].neighbors {
                if is_visible.contains_key(&g) {
                    continue;
                }
                let vis = self.distance(g, apex) > self.eps;
                is_visible.insert(g, vis);
                if vis {
                    visible.push(g);
                }
            }
        }
        // close holes: an invisible facet with every neighbor visible and the
        // apex on its outer side is taken as visible too
        loop {
            let mut grew = false;
            let hidden: Vec<usize> = is_visible.iter().filter(|(_, &v)| !v).map(|(&f, _)| f).collect();
            let mut hidden = hidden;
            hidden.sort_unstable();
            for g in hidden {
                if self.distance(g, apex) > 0.0 && self.simplices[g].neighbors.iter().all(|n| is_visible.get(n) == Some(&true)) {
                    is_visible.insert(g, true);
                    visible.push(g);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }

        // horizon ridges: (ridge vertices, invisible neighbor, visible facet)
        let mut horizon: Vec<(Vec<usize>, usize, usize)> = Vec::new();
        for &f in &visible {
            let s = &self.simplices[f];
            for (i, &g) in s.neighbors.iter().enumerate() {
                if is_visible.get(&g) != Some(&true) {
                    let ridge: Vec<usize> = s.verts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                    horizon.push((ridge, g, f));
                }
            }
        }

        // compute all new planes first so a degenerate cone can be rejected
        let mut planned = Vec::with_capacity(horizon.len());
        for (ridge, _, _) in &horizon {
            let mut verts = ridge.clone();
            verts.push(apex);
            verts.sort_unstable();
            match self.oriented_plane(&verts) {
                Some(plane) => planned.push((verts, plane)),
                None => return false,
            }
        }

        let first_new = self.simplices.len();
        let mut ridge_map: HashMap<Vec<usize>, usize> = HashMap::new();
        for (h, (verts, (normal, offset))) in planned.into_iter().enumerate() {
            let id = first_new + h;
            let (_, nb, vis) = &horizon[h];
            let apex_pos = verts.iter().position(|&v| v == apex).unwrap();
            let mut neighbors = vec![usize::MAX; self.dim];
            neighbors[apex_pos] = *nb;
            // re-link the invisible neighbor
            let nbs = &mut self.simplices[*nb];
            if let Some(slot) = nbs.neighbors.iter_mut().find(|x| **x == *vis) {
                *slot = id;
            }
            for (i, _) in verts.iter().enumerate() {
                if i == apex_pos {
                    continue;
                }
                let key: Vec<usize> = verts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                match ridge_map.remove(&key) {
                    Some(other) => {
                        neighbors[i] = other;
                        let os = &mut self.simplices[other];
                        let pos = os.verts.iter().position(|v| !key.contains(v)).expect("ridge partner has one vertex off the ridge");
                        os.neighbors[pos] = id;
                    }
                    None => {
                        ridge_map.insert(key, id);
                    }
                }
            }
            self.simplices.push(Simplex { verts, normal, offset, neighbors, outside: Vec::new(), alive: true });
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            let s = &mut self.simplices[f];
            s.alive = false;
            orphans.append(&mut s.outside);
        }
        let new_ids: Vec<usize> = (first_new..self.simplices.len()).collect();
        self.assign(&orphans, &new_ids);
        true
    }

    /// Merges coplanar simplices into facets and keeps only extreme vertices.
    fn export(&self) -> VRep {
        let alive: Vec<usize> = (0..self.simplices.len()).filter(|&f| self.simplices[f].alive).collect();
        let mut parent: HashMap<usize, usize> = alive.iter().map(|&f| (f, f)).collect();
        fn find(parent: &mut HashMap<usize, usize>, x: usize) -> usize {
            let mut r = x;
            while parent[&r] != r {
                r = parent[&r];
            }
            let mut c = x;
            while parent[&c] != r {
                let next = parent[&c];
                parent.insert(c, r);
                c = next;
            }
            r
        }
        for &f in &alive {
            let s = &self.simplices[f];
            for (i, &g) in s.neighbors.iter().enumerate() {
                if g < f || !self.simplices[g].alive {
                    continue;
                }
                let t = &self.simplices[g];
                let _ = i;
                let off_f = t.verts.iter().find(|v| !s.verts.contains(v)).copied();
                let off_g = s.verts.iter().find(|v| !t.verts.contains(v)).copied();
                let (Some(off_f), Some(off_g)) = (off_f, off_g) else { continue };
                let coplanar = dot(&s.normal, &t.normal) > 0.0
                    && (dot(&s.normal, &self.points[off_f]) - s.offset).abs() <= self.eps_merge
                    && (dot(&t.normal, &self.points[off_g]) - t.offset).abs() <= self.eps_merge;
                if coplanar {
                    let (a, b) = (find(&mut parent, f), find(&mut parent, g));
                    if a != b {
                        parent.insert(a.max(b), a.min(b));
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut group_of: HashMap<usize, usize> = HashMap::new();
        for &f in &alive {
            let r = find(&mut parent, f);
            let gi = *group_of.entry(r).or_insert_with(|| {
                groups.push((r, Vec::new()));
                groups.len() - 1
            });
            for &v in &self.simplices[f].verts {
                if !groups[gi].1.contains(&v) {
                    groups[gi].1.push(v);
                }
            }
        }

        let mut facets: Vec<Facet> = groups
            .iter()
            .map(|(root, verts)| {
                let reference = &self.simplices[*root].normal;
                let normal = if verts.len() > self.dim { self.fit_normal(verts, reference) } else { reference.clone() };
                let offset = verts.iter().map(|&v| dot(&normal, &self.points[v])).fold(f64::NEG_INFINITY, f64::max);
                Facet { normal, offset }
            })
            .collect();

        // a vertex is extreme iff the normals of the facets through it span
        // the space; facets whose groups contain it are checked first
        let mut member_of: HashMap<usize, Vec<usize>> = HashMap::new();
        for (gi, (_, verts)) in groups.iter().enumerate() {
            for &v in verts {
                member_of.entry(v).or_default().push(gi);
            }
        }
        let mut candidates: Vec<usize> = member_of.keys().copied().collect();
        candidates.sort_unstable();
        let vertices: Vec<Vec<f64>> = candidates
            .into_iter()
            .filter(|v| {
                let p = &self.points[*v];
                let members: Vec<Vec<f64>> = member_of[v]
                    .iter()
                    .map(|&gi| &facets[gi])
                    .filter(|f| (dot(&f.normal, p) - f.offset).abs() <= self.eps_merge)
                    .map(|f| f.normal.clone())
                    .collect();
                if linalg::rank(&members, 1e-6) == self.dim {
                    return true;
                }
                let incident: Vec<Vec<f64>> =
                    facets.iter().filter(|f| (dot(&f.normal, p) - f.offset).abs() <= self.eps_merge).map(|f| f.normal.clone()).collect();
                linalg::rank(&incident, 1e-6) == self.dim
            })
            .map(|v| self.points[v].clone())
            .collect();
        facets.sort_by(|a, b| lex_cmp(&a.normal, &b.normal).then(a.offset.total_cmp(&b.offset)));

        VRep { dim: self.dim, vertices, facets, engine: Some(Arc::new(self.clone())) }
    }

    /// Least-squares hyperplane normal through `verts`, oriented like `reference`.
    fn fit_normal(&self, verts: &[usize], reference: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let k = verts.len();
        let mut centroid = vec![0.0; d];
        for &v in verts {
            for (c, x) in centroid.iter_mut().zip(&self.points[v]) {
                *c += x / k as f64;
            }
        }
        let m = nalgebra::DMatrix::from_fn(k.max(d), d, |r, c| if r < k { self.points[verts[r]][c] - centroid[c] } else { 0.0 });
        let svd = m.svd(false, true);
        let Some(v_t) = svd.v_t else { return reference.to_vec() };
        let imin = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc }).0;
        let mut n: Vec<f64> = (0..d).map(|c| v_t[(imin, c)]).collect();
        let len = linalg::norm(&n);
        n.iter_mut().for_each(|x| *x /= len);
        if dot(&n, reference) < 0.0 {
            n.iter_mut().for_each(|x| *x = -*x);
        }
        n
    }
}

/// Lexicographic order on normals with a small tie band per component.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}
