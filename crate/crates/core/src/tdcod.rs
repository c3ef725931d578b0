//! Transmission-distribution coordinated dispatch.
//!
//! Feeders are radial networks under the linearized DistFlow model, with
//! squared voltage magnitudes as variables so that every constraint stays
//! linear. A feeder couples to the transmission grid only through its net
//! active-power export at the root and its operating cost; everything else,
//! including the root reactive exchange, is internal.
//!
//! Inside a feeder all powers are per unit on `base_mva`; the export seen by
//! the transmission system is in MW.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{default_cost_cap, CostSegment, Generator};
use crate::error::{Error, Result};
use crate::geometry::HPolytope;
use crate::lp::{self, LpProblem, LpStatus};
use crate::pve::{self, PveConfig, PveResult};

/// Default number of sides of the polygon that inner-approximates each
/// branch capacity circle.
pub const DEFAULT_SEGMENTS: usize = 8;

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

/// A distributed energy resource. Bounds are per unit; cost segments are in
/// $/h against output in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Der {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost_segments: Vec<CostSegment>,
}

impl Der {
    fn as_generator(&self, base_mva: f64) -> Generator {
        Generator { node: self.node, p_min: self.p_min * base_mva, p_max: self.p_max * base_mva, cost_segments: self.cost_segments.clone() }
    }
}

/// Line from `from` (nearer the root) to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederBranch {
    pub from: usize,
    pub to: usize,
    /// Resistance (p.u.).
    pub r: f64,
    /// Reactance (p.u.).
    pub x: f64,
    /// Apparent-power limit (p.u.).
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederSystem {
    pub id: usize,
    pub base_mva: f64,
    /// Active demand per node (p.u.); node 0 is the root.
    pub load_p: Vec<f64>,
    /// Reactive demand per node (p.u.).
    pub load_q: Vec<f64>,
    pub ders: Vec<Der>,
    pub branches: Vec<FeederBranch>,
    /// Squared-voltage limits at non-root nodes (p.u.²).
    pub v2_min: f64,
    pub v2_max: f64,
    /// Fixed squared voltage at the root (p.u.²).
    pub v2_root: f64,
    /// Sides of the capacity polygon per branch.
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_cap: Option<f64>,
}

impl FeederSystem {
    pub fn num_nodes(&self) -> usize {
        self.load_p.len()
    }

    pub fn cost_cap(&self) -> f64 {
        self.cost_cap.unwrap_or_else(|| {
            let gens: Vec<Generator> = self.ders.iter().map(|d| d.as_generator(self.base_mva)).collect();
            default_cost_cap(&gens)
        })
    }

    /// Parent branch of every non-root node; errors if the branches do not
    /// form a tree oriented away from node 0.
    pub fn parent_branches(&self) -> Result<Vec<Option<usize>>> {
        let n = self.num_nodes();
        let non_radial = |reason: String| Err(Error::NonRadial { feeder: self.id, reason });
        if self.branches.len() + 1 != n {
            return non_radial(format!("{} branches for {n} nodes", self.branches.len()));
        }
        let mut parent = vec![None; n];
        for (b, br) in self.branches.iter().enumerate() {
            if br.from >= n || br.to >= n {
                return Err(Error::InvalidInput(format!("feeder {}: branch {b} end out of range", self.id)));
            }
            if br.to == 0 {
                return non_radial(format!("branch {b} points into the root"));
            }
            if parent[br.to].is_some() {
                return non_radial(format!("node {} has two parent branches", br.to));
            }
            parent[br.to] = Some(b);
        }
        for start in 1..n {
            let mut node = start;
            for _ in 0..n {
                match parent[node] {
                    Some(b) => node = self.branches[b].from,
                    None => break,
                }
            }
            if node != 0 {
                return non_radial(format!("node {start} is not connected to the root"));
            }
        }
        Ok(parent)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("feeder {}: {msg}", self.id)));
        let n = self.num_nodes();
        if n == 0 {
            return bad("no nodes".into());
        }
        if self.load_q.len() != n {
            return bad(format!("{} reactive loads for {n} nodes", self.load_q.len()));
        }
        if !(self.base_mva > 0.0) || !self.base_mva.is_finite() {
            return bad("base_mva must be positive".into());
        }
        if self.load_p.iter().chain(&self.load_q).any(|v| !v.is_finite()) {
            return bad("non-finite load".into());
        }
        for d in &self.ders {
            d.as_generator(self.base_mva).validate(n, &format!("feeder {}", self.id))?;
            if !(d.q_min.is_finite() && d.q_max.is_finite()) || d.q_min > d.q_max {
                return bad(format!("DER at node {} has reactive bounds [{}, {}]", d.node, d.q_min, d.q_max));
            }
        }
        for (b, br) in self.branches.iter().enumerate() {
            if !(br.r >= 0.0 && br.x >= 0.0 && br.cap > 0.0) || !(br.r + br.x + br.cap).is_finite() {
                return bad(format!("branch {b} needs r, x ≥ 0 and a positive capacity"));
            }
        }
        if !(self.v2_min <= self.v2_root && self.v2_root <= self.v2_max) {
            return bad(format!("root voltage {} outside [{}, {}]", self.v2_root, self.v2_min, self.v2_max));
        }
        if self.segments < 3 {
            return bad(format!("capacity polygon needs at least 3 sides, got {}", self.segments));
        }
        if let Some(cap) = self.cost_cap {
            if !cap.is_finite() {
                return bad("non-finite cost cap".into());
            }
        }
        self.parent_branches().map(|_| ())
    }

    fn layout(&self) -> FeederLayout {
        FeederLayout { ders: self.ders.len(), branches: self.branches.len() }
    }
}

/// Offsets of the internal variables of a feeder region, relative to `y`.
#[derive(Debug, Clone, Copy)]
struct FeederLayout {
    ders: usize,
    branches: usize,
}

impl FeederLayout {
    const Q0: usize = 0;
    fn der_p(&self, g: usize) -> usize {
        1 + 3 * g
    }
    fn der_q(&self, g: usize) -> usize {
        2 + 3 * g
    }
    fn der_pi(&self, g: usize) -> usize {
        3 + 3 * g
    }
    fn flow_p(&self, b: usize) -> usize {
        1 + 3 * self.ders + 2 * b
    }
    fn flow_q(&self, b: usize) -> usize {
        2 + 3 * self.ders + 2 * b
    }
    /// Squared voltage of non-root node `n ≥ 1`.
    fn v2(&self, n: usize) -> usize {
        1 + 3 * self.ders + 2 * self.branches + (n - 1)
    }
    fn len(&self, nodes: usize) -> usize {
        1 + 3 * self.ders + 2 * self.branches + nodes.saturating_sub(1)
    }
}

/// Half-planes `cos θ_k·P + sin θ_k·Q ≤ cos(π/N)·cap` with `θ_k = 2kπ/N`,
/// `k = 0..N`: a regular `N`-gon inscribed in the circle of radius `cap`.
pub fn capacity_rows(segments: usize, cap: f64) -> Vec<([f64; 2], f64)> {
    let n = segments as f64;
    (0..segments)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n;
            ([theta.cos(), theta.sin()], (PI / n).cos() * cap)
        })
        .collect()
}

/// The feeder region over `x = (P₀, π)` and the internal variables described
/// in the module docs. `P₀` is the net export to the transmission grid (MW).
pub fn build_feeder_region(feeder: &FeederSystem) -> Result<HPolytope> {
    feeder.validate()?;
    let nn = feeder.num_nodes();
    let lay = feeder.layout();
    let ny = lay.len(nn);
    let mut h = HPolytope::empty(2, ny);
    let mut push = |x: &[(usize, f64)], y: &[(usize, f64)], c: f64| {
        let mut a = vec![0.0; 2];
        let mut b = vec![0.0; ny];
        for &(j, v) in x {
            a[j] += v;
        }
        for &(j, v) in y {
            b[j] += v;
        }
        h.push_row(a, b, c);
    };
    let both = |push: &mut dyn FnMut(&[(usize, f64)], &[(usize, f64)], f64), x: &[(usize, f64)], y: &[(usize, f64)], c: f64| {
        push(x, y, c);
        let nx: Vec<(usize, f64)> = x.iter().map(|&(j, v)| (j, -v)).collect();
        let ny: Vec<(usize, f64)> = y.iter().map(|&(j, v)| (j, -v)).collect();
        push(&nx, &ny, -c);
    };
    let (p0, pi) = (0, 1);
    let base = feeder.base_mva;

    push(&[(pi, 1.0)], &[], feeder.cost_cap());
    let sum_pi: Vec<(usize, f64)> = (0..lay.ders).map(|g| (lay.der_pi(g), 1.0)).collect();
    push(&[(pi, -1.0)], &sum_pi, 0.0);
    for (g, d) in feeder.ders.iter().enumerate() {
        for s in &d.cost_segments {
            push(&[], &[(lay.der_p(g), s.slope * base), (lay.der_pi(g), -1.0)], -s.intercept);
        }
    }

    // nodal balance: generation + inflow − outflow − export = demand
    for n in 0..nn {
        let mut yp = Vec::new();
        let mut yq = Vec::new();
        for (g, _) in feeder.ders.iter().enumerate().filter(|(_, d)| d.node == n) {
            yp.push((lay.der_p(g), 1.0));
            yq.push((lay.der_q(g), 1.0));
        }
        for (b, br) in feeder.branches.iter().enumerate() {
            let sign = if br.to == n {
                1.0
            } else if br.from == n {
                -1.0
            } else {
                continue;
            };
            yp.push((lay.flow_p(b), sign));
            yq.push((lay.flow_q(b), sign));
        }
        let xp: Vec<(usize, f64)> = if n == 0 { vec![(p0, -1.0 / base)] } else { Vec::new() };
        if n == 0 {
            yq.push((FeederLayout::Q0, -1.0));
        }
        both(&mut push, &xp, &yp, feeder.load_p[n]);
        both(&mut push, &[], &yq, feeder.load_q[n]);
    }

    // DistFlow: V_to² − V_from² + 2(r·P + x·Q) = 0
    for (b, br) in feeder.branches.iter().enumerate() {
        let mut y = vec![(lay.v2(br.to), 1.0), (lay.flow_p(b), 2.0 * br.r), (lay.flow_q(b), 2.0 * br.x)];
        let mut c = 0.0;
        if br.from == 0 {
            c = feeder.v2_root;
        } else {
            y.push((lay.v2(br.from), -1.0));
        }
        both(&mut push, &[], &y, c);
    }

    for (b, br) in feeder.branches.iter().enumerate() {
        for ([cp, cq], rhs) in capacity_rows(feeder.segments, br.cap) {
            push(&[], &[(lay.flow_p(b), cp), (lay.flow_q(b), cq)], rhs);
        }
    }
    for n in 1..nn {
        push(&[], &[(lay.v2(n), 1.0)], feeder.v2_max);
        push(&[], &[(lay.v2(n), -1.0)], -feeder.v2_min);
    }
    for (g, d) in feeder.ders.iter().enumerate() {
        push(&[], &[(lay.der_p(g), 1.0)], d.p_max);
        push(&[], &[(lay.der_p(g), -1.0)], -d.p_min);
        push(&[], &[(lay.der_q(g), 1.0)], d.q_max);
        push(&[], &[(lay.der_q(g), -1.0)], -d.q_min);
    }

    let status = lp::solve(&h.to_lp(vec![0.0; h.num_vars()]), None)?.status;
    if status != LpStatus::Optimal {
        return Err(Error::InfeasibleFeeder { feeder: feeder.id });
    }
    Ok(h)
}

pub fn compute_feeder_ep(feeder: &FeederSystem, config: &PveConfig) -> Result<PveResult> {
    pve::project(&build_feeder_region(feeder)?, config)
}

/// Feeder projections with the wall-clock seconds each took, in feeder order.
pub fn compute_feeder_eps(feeders: &[FeederSystem], config: &PveConfig, parallel: bool) -> Result<Vec<(PveResult, f64)>> {
    let one = |f: &FeederSystem| {
        let start = Instant::now();
        compute_feeder_ep(f, config).map(|r| (r, start.elapsed().as_secs_f64()))
    };
    if parallel {
        feeders.par_iter().map(one).collect()
    } else {
        feeders.iter().map(one).collect()
    }
}

/// Piecewise-linear cost against exchange, as breakpoints sorted by exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub breakpoints: Vec<(f64, f64)>,
}

impl CostCurve {
    /// Linear interpolation; `None` outside the covered exchange range.
    pub fn evaluate(&self, exchange: f64) -> Option<f64> {
        let pts = &self.breakpoints;
        let (first, last) = (pts.first()?, pts.last()?);
        let tol = 1e-9 * (1.0 + first.0.abs().max(last.0.abs()));
        if exchange < first.0 - tol || exchange > last.0 + tol {
            return None;
        }
        if pts.len() == 1 {
            return Some(first.1);
        }
        let i = pts.partition_point(|p| p.0 < exchange).clamp(1, pts.len() - 1);
        let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
        if x1 - x0 <= 0.0 {
            return Some(y1);
        }
        Some(y0 + (y1 - y0) * (exchange - x0) / (x1 - x0))
    }
}

/// Pieces `(length, slope)` of a convex cost over `[lo, hi]`, left to right.
fn envelope_pieces(segments: &[CostSegment], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let value = |s: &CostSegment, p: f64| s.slope * p + s.intercept;
    let mut pieces = Vec::new();
    let mut p = lo;
    // active segment at p: the largest value, ties to the larger slope
    let mut active = (0..segments.len())
        .max_by(|&i, &j| value(&segments[i], p).total_cmp(&value(&segments[j], p)).then(segments[i].slope.total_cmp(&segments[j].slope)))
        .expect("at least one segment");
    while p < hi {
        let cur = segments[active];
        let next = (0..segments.len())
            .filter(|&j| segments[j].slope > cur.slope)
            .map(|j| (j, (cur.intercept - segments[j].intercept) / (segments[j].slope - cur.slope)))
            .filter(|&(_, at)| at > p)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(segments[b.0].slope.total_cmp(&segments[a.0].slope)));
        match next {
            Some((j, at)) if at < hi => {
                pieces.push((at - p, cur.slope));
                p = at;
                active = j;
            }
            _ => {
                pieces.push((hi - p, cur.slope));
                p = hi;
            }
        }
    }
    pieces
}

/// Network-free aggregate cost of the DERs: every unit starts at its minimum
/// and increments are taken in merit order. Exchange is total DER output less
/// total demand, in MW.
pub fn aggregate_der_cost(feeder: &FeederSystem) -> CostCurve {
    let base = feeder.base_mva;
    let demand: f64 = feeder.load_p.iter().sum::<f64>() * base;
    let mut exchange = feeder.ders.iter().map(|d| d.p_min * base).sum::<f64>() - demand;
    let mut cost: f64 = feeder.ders.iter().map(|d| d.as_generator(base).cost(d.p_min * base)).sum();
    let mut pieces: Vec<(f64, f64)> = feeder
        .ders
        .iter()
        .flat_map(|d| envelope_pieces(&d.cost_segments, d.p_min * base, d.p_max * base))
        .filter(|&(len, _)| len > 0.0)
        .collect();
    pieces.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut breakpoints = vec![(exchange, cost)];
    let mut last_slope = f64::NAN;
    for (len, slope) in pieces {
        exchange += len;
        cost += len * slope;
        if slope == last_slope {
            *breakpoints.last_mut().unwrap() = (exchange, cost);
        } else {
            breakpoints.push((exchange, cost));
        }
        last_slope = slope;
    }
    CostCurve { breakpoints }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSystem {
    pub generators: Vec<Generator>,
    /// Demand per node (MW).
    pub loads: Vec<f64>,
    pub ptdf: Vec<Vec<f64>>,
    /// Limit per branch (MW).
    pub branch_caps: Vec<f64>,
    /// Attachment node of each feeder, in feeder order.
    pub feeder_nodes: Vec<usize>,
}

impl TransmissionSystem {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("transmission: {msg}")));
        let n = self.loads.len();
        if n == 0 {
            return bad("no nodes".into());
        }
        for g in &self.generators {
            g.validate(n, "transmission")?;
        }
        if self.loads.iter().any(|d| !d.is_finite()) {
            return bad("non-finite load".into());
        }
        if self.ptdf.len() != self.branch_caps.len() {
            return bad(format!("{} PTDF rows but {} branch caps", self.ptdf.len(), self.branch_caps.len()));
        }
        if let Some(l) = self.ptdf.iter().position(|r| r.len() != n || r.iter().any(|v| !v.is_finite())) {
            return bad(format!("PTDF row {l} must hold {n} finite entries"));
        }
        if let Some(l) = self.branch_caps.iter().position(|&f| !(f > 0.0) || !f.is_finite()) {
            return bad(format!("branch {l} has non-positive capacity"));
        }
        if let Some(&a) = self.feeder_nodes.iter().find(|&&a| a >= n) {
            return bad(format!("feeder attachment node {a} out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdSystem {
    pub transmission: TransmissionSystem,
    pub feeders: Vec<FeederSystem>,
}

impl TdSystem {
    pub fn validate(&self) -> Result<()> {
        self.transmission.validate()?;
        if self.transmission.feeder_nodes.len() != self.feeders.len() {
            return Err(Error::InvalidInput(format!(
                "{} attachment nodes for {} feeders",
                self.transmission.feeder_nodes.len(),
                self.feeders.len()
            )));
        }
        self.feeders.iter().try_for_each(FeederSystem::validate)
    }
}

/// Internal state of one feeder at a fixed export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederDispatch {
    pub export: f64,
    pub cost: f64,
    /// Reactive exchange at the root (p.u.).
    pub q_root: f64,
    pub der_p: Vec<f64>,
    pub der_q: Vec<f64>,
    pub flow_p: Vec<f64>,
    pub flow_q: Vec<f64>,
    /// Squared voltages of all nodes, root included.
    pub v2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdDispatch {
    /// Transmission plus feeder cost ($/h).
    pub objective: f64,
    pub transmission_cost: f64,
    pub generation: Vec<f64>,
    /// Net export of each feeder (MW).
    pub feeder_exports: Vec<f64>,
    pub feeder_costs: Vec<f64>,
    /// Internal feeder state; empty before re-dispatch.
    pub feeders: Vec<FeederDispatch>,
}

struct TnLayout {
    gen_p: Vec<usize>,
    gen_pi: Vec<usize>,
    feeder_x: Vec<[usize; 2]>,
}

/// Generators with their epigraphs, the balance and branch rows, and a
/// `(P₀, π)` pair per feeder, all minimized together.
fn transmission_lp(p: &mut LpProblem, system: &TdSystem) -> TnLayout {
    let tn = &system.transmission;
    let gen_p: Vec<usize> = tn.generators.iter().map(|g| p.add_var(g.p_min, g.p_max, 0.0)).collect();
    let gen_pi: Vec<usize> = tn.generators.iter().map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0)).collect();
    for (g, gen) in tn.generators.iter().enumerate() {
        for s in &gen.cost_segments {
            p.add_le(vec![(gen_p[g], s.slope), (gen_pi[g], -1.0)], -s.intercept);
        }
    }
    let feeder_x: Vec<[usize; 2]> = system
        .feeders
        .iter()
        .map(|_| [p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0), p.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0)])
        .collect();
    let demand: f64 = tn.loads.iter().sum();
    let mut balance: Vec<(usize, f64)> = gen_p.iter().map(|&j| (j, 1.0)).collect();
    balance.extend(feeder_x.iter().map(|x| (x[0], 1.0)));
    p.add_eq(balance, demand);
    for (row, &cap) in tn.ptdf.iter().zip(&tn.branch_caps) {
        let mut coeffs: Vec<(usize, f64)> = tn.generators.iter().zip(&gen_p).map(|(g, &j)| (j, row[g.node])).collect();
        coeffs.extend(tn.feeder_nodes.iter().zip(&feeder_x).map(|(&n, x)| (x[0], row[n])));
        coeffs.retain(|&(_, v)| v != 0.0);
        let load_flow: f64 = row.iter().zip(&tn.loads).map(|(t, d)| t * d).sum();
        p.add_row(coeffs, load_flow - cap, load_flow + cap);
    }
    TnLayout { gen_p, gen_pi, feeder_x }
}

fn read_tn(layout: &TnLayout, z: &[f64]) -> TdDispatch {
    let transmission_cost: f64 = layout.gen_pi.iter().map(|&j| z[j]).sum();
    let feeder_costs: Vec<f64> = layout.feeder_x.iter().map(|x| z[x[1]]).collect();
    TdDispatch {
        objective: transmission_cost + feeder_costs.iter().sum::<f64>(),
        transmission_cost,
        generation: layout.gen_p.iter().map(|&j| z[j]).collect(),
        feeder_exports: layout.feeder_x.iter().map(|x| z[x[0]]).collect(),
        feeder_costs,
        feeders: Vec::new(),
    }
}

/// Transmission dispatch with each feeder restricted to its projected region.
pub fn solve_tn_coordinator(system: &TdSystem, eps: &[PveResult]) -> Result<TdDispatch> {
    system.validate()?;
    if eps.len() != system.feeders.len() {
        return Err(Error::InvalidInput(format!("{} projections for {} feeders", eps.len(), system.feeders.len())));
    }
    let mut p = LpProblem::new(0);
    let layout = transmission_lp(&mut p, system);
    for (ep, x) in eps.iter().zip(&layout.feeder_x) {
        if ep.hull.dim != 2 {
            return Err(Error::InvalidInput(format!("feeder projection has dimension {}, expected 2", ep.hull.dim)));
        }
        for f in &ep.hull.facets {
            let coeffs = x.iter().zip(&f.normal).filter(|(_, &v)| v != 0.0).map(|(&j, &v)| (j, v)).collect();
            p.add_le(coeffs, f.offset);
        }
    }
    let sol = lp::solve(&p, None)?;
    match sol.status {
        LpStatus::Optimal => Ok(read_tn(&layout, &sol.z)),
        _ => Err(Error::InfeasibleCoordination),
    }
}

fn read_feeder(feeder: &FeederSystem, x: &[f64], y: &[f64]) -> FeederDispatch {
    let lay = feeder.layout();
    let mut v2 = vec![feeder.v2_root];
    v2.extend((1..feeder.num_nodes()).map(|n| y[lay.v2(n)]));
    FeederDispatch {
        export: x[0],
        cost: x[1],
        q_root: y[FeederLayout::Q0],
        der_p: (0..lay.ders).map(|g| y[lay.der_p(g)]).collect(),
        der_q: (0..lay.ders).map(|g| y[lay.der_q(g)]).collect(),
        flow_p: (0..lay.branches).map(|b| y[lay.flow_p(b)]).collect(),
        flow_q: (0..lay.branches).map(|b| y[lay.flow_q(b)]).collect(),
        v2,
    }
}

/// Cheapest internal dispatch of a feeder at a fixed export (MW).
pub fn solve_feeder_dispatch(feeder: &FeederSystem, fixed_export: f64) -> Result<FeederDispatch> {
    let region = build_feeder_region(feeder)?;
    let mut obj = vec![0.0; region.num_vars()];
    obj[1] = -1.0;
    let mut p = region.to_lp(obj);
    p.set_bounds(0, fixed_export, fixed_export);
    let sol = lp::solve(&p, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::InfeasibleBoundary { subsystem: feeder.id });
    }
    Ok(read_feeder(feeder, &sol.z[..2], &sol.z[2..]))
}

/// The monolithic dispatch over the transmission system and every feeder.
pub fn solve_joint_td(system: &TdSystem) -> Result<TdDispatch> {
    system.validate()?;
    let regions: Vec<HPolytope> = system.feeders.iter().map(build_feeder_region).collect::<Result<_>>()?;
    let mut p = LpProblem::new(0);
    let layout = transmission_lp(&mut p, system);
    let mut internal = Vec::new();
    for (region, x) in regions.iter().zip(&layout.feeder_x) {
        let y: Vec<usize> = (0..region.num_y).map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
        let vars: Vec<usize> = x.iter().chain(&y).copied().collect();
        region.append_to(&mut p, &vars);
        internal.push(y);
    }
    let sol = lp::solve(&p, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible);
    }
    let mut out = read_tn(&layout, &sol.z);
    out.feeders = system
        .feeders
        .iter()
        .zip(&layout.feeder_x)
        .zip(&internal)
        .map(|((f, x), y)| {
            let xv: Vec<f64> = x.iter().map(|&j| sol.z[j]).collect();
            let yv: Vec<f64> = y.iter().map(|&j| sol.z[j]).collect();
            read_feeder(f, &xv, &yv)
        })
        .collect();
    Ok(out)
}

/// The three-step protocol with its timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdCoordination {
    pub eps: Vec<PveResult>,
    pub coordinator: TdDispatch,
    /// Coordinator schedule with realized feeder costs and internal state.
    pub dispatch: TdDispatch,
    pub ep_seconds: Vec<f64>,
    pub coordinator_seconds: f64,
    pub feeder_seconds: f64,
}

/// Projects every feeder, solves the transmission coordinator, then
/// re-dispatches each feeder at its scheduled export.
pub fn coordinate(system: &TdSystem, config: &PveConfig, parallel: bool) -> Result<TdCoordination> {
    system.validate()?;
    let (eps, ep_seconds): (Vec<PveResult>, Vec<f64>) = compute_feeder_eps(&system.feeders, config, parallel)?.into_iter().unzip();
    let start = Instant::now();
    let coordinator = solve_tn_coordinator(system, &eps)?;
    let coordinator_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let feeders: Vec<FeederDispatch> =
        system.feeders.iter().zip(&coordinator.feeder_exports).map(|(f, &e)| solve_feeder_dispatch(f, e)).collect::<Result<_>>()?;
    let feeder_seconds = start.elapsed().as_secs_f64();
    let mut dispatch = coordinator.clone();
    dispatch.feeder_costs = feeders.iter().map(|f| f.cost).collect();
    dispatch.objective = dispatch.transmission_cost + dispatch.feeder_costs.iter().sum::<f64>();
    dispatch.feeders = feeders;
    Ok(TdCoordination { eps, coordinator, dispatch, ep_seconds, coordinator_seconds, feeder_seconds })
}

#[cfg(test)]
mod tests;
