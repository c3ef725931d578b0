//! Multi-area coordinated dispatch.
//!
//! Each area is described by a PTDF-based DC model. Its coordination variables
//! are the injections it sends into the tie-line network at its boundary nodes
//! together with its operating cost; generator outputs and their cost
//! epigraphs are internal. A coordinator schedules tie-line flows over the
//! projected area regions, and each area then re-dispatches internally with
//! its boundary injections fixed.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{default_cost_cap, Generator};
use crate::error::{Error, Result};
use crate::geometry::HPolytope;
use crate::lp::{self, LpProblem, LpStatus};
use crate::pve::{self, PveConfig, PveResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSystem {
    pub id: usize,
    pub generators: Vec<Generator>,
    /// Demand per node (MW); its length is the node count.
    pub loads: Vec<f64>,
    /// Branch × node sensitivities of internal branch flows to nodal injections.
    pub ptdf: Vec<Vec<f64>>,
    /// Thermal limit per internal branch (MW).
    pub branch_caps: Vec<f64>,
    /// Nodes where tie-lines attach, in coordination-variable order.
    pub boundary_nodes: Vec<usize>,
    /// Upper bound on the area cost ($/h); defaults to [`default_cost_cap`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_cap: Option<f64>,
    /// Largest injection magnitude at each boundary node (MW), usually the
    /// capacity of the ties attached there. Defaults to
    /// [`AreaSystem::injection_limit`] at every node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_limits: Option<Vec<f64>>,
}

impl AreaSystem {
    pub fn num_nodes(&self) -> usize {
        self.loads.len()
    }

    pub fn cost_cap(&self) -> f64 {
        self.cost_cap.unwrap_or_else(|| default_cost_cap(&self.generators))
    }

    /// Number of coordination variables: one injection per boundary node plus
    /// the cost.
    pub fn num_coordination(&self) -> usize {
        self.boundary_nodes.len() + 1
    }

    /// Injection bound that never binds: all generation plus all load.
    pub fn injection_limit(&self) -> f64 {
        let gen: f64 = self.generators.iter().map(|g| g.p_max.abs().max(g.p_min.abs())).sum();
        let load: f64 = self.loads.iter().map(|d| d.abs()).sum();
        gen + load + 1.0
    }

    /// Injection bound per boundary node.
    pub fn boundary_limits(&self) -> Vec<f64> {
        self.boundary_limits.clone().unwrap_or_else(|| vec![self.injection_limit(); self.boundary_nodes.len()])
    }

    pub fn validate(&self) -> Result<()> {
        let owner = format!("area {}", self.id);
        let bad = |msg: String| Err(Error::InvalidInput(format!("{owner}: {msg}")));
        let n = self.num_nodes();
        if n == 0 {
            return bad("no nodes".into());
        }
        for g in &self.generators {
            g.validate(n, &owner)?;
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
        if let Some(&b) = self.boundary_nodes.iter().find(|&&b| b >= n) {
            return bad(format!("boundary node {b} out of range"));
        }
        let mut sorted = self.boundary_nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("repeated boundary node".into());
        }
        if let Some(limits) = &self.boundary_limits {
            if limits.len() != self.boundary_nodes.len() {
                return bad(format!("{} boundary limits for {} boundary nodes", limits.len(), self.boundary_nodes.len()));
            }
            if limits.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
                return bad("boundary limits must be finite and nonnegative".into());
            }
        }
        if let Some(cap) = self.cost_cap {
            if !cap.is_finite() {
                return bad("non-finite cost cap".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieLine {
    pub from_area: usize,
    pub to_area: usize,
    /// Node index inside the sending area; must be one of its boundary nodes.
    pub from_node: usize,
    pub to_node: usize,
    /// Series reactance (p.u.).
    pub reactance: f64,
    pub flow_min: f64,
    pub flow_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieLineSystem {
    pub tie_lines: Vec<TieLine>,
    /// Area whose angle is fixed to zero.
    pub reference_area: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiAreaSystem {
    pub areas: Vec<AreaSystem>,
    pub ties: TieLineSystem,
}

impl MultiAreaSystem {
    pub fn validate(&self) -> Result<()> {
        for a in &self.areas {
            a.validate()?;
        }
        let r = self.areas.len();
        if self.ties.reference_area >= r {
            return Err(Error::InvalidInput(format!("reference area {} out of range", self.ties.reference_area)));
        }
        for (s, t) in self.ties.tie_lines.iter().enumerate() {
            let bad = |msg: &str| Err(Error::InvalidInput(format!("tie-line {s}: {msg}")));
            if t.from_area >= r || t.to_area >= r {
                return bad("area index out of range");
            }
            if t.from_area == t.to_area {
                return bad("connects an area to itself");
            }
            if !self.areas[t.from_area].boundary_nodes.contains(&t.from_node) || !self.areas[t.to_area].boundary_nodes.contains(&t.to_node)
            {
                return bad("end node is not a boundary node of its area");
            }
            if !(t.reactance > 0.0) || !t.reactance.is_finite() {
                return bad("reactance must be positive");
            }
            if t.flow_min.is_nan() || t.flow_max.is_nan() || t.flow_min > t.flow_max {
                return bad("flow_min exceeds flow_max");
            }
        }
        Ok(())
    }
}

/// Outcome of a coordinator, joint or protocol solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    /// Total cost ($/h).
    pub objective: f64,
    pub area_costs: Vec<f64>,
    /// Per area, injection into the tie network at each boundary node (MW).
    pub boundary_injections: Vec<Vec<f64>>,
    pub tie_flows: Vec<f64>,
    pub angles: Vec<f64>,
    /// Per area, output of each generator (MW); empty before re-dispatch.
    pub generator_dispatch: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalDispatch {
    pub generation: Vec<f64>,
    pub cost: f64,
}

/// The area region over `x = (P^B, π)` and `y = (P^G, π^G)`.
pub fn build_area_region(area: &AreaSystem) -> Result<HPolytope> {
    area.validate()?;
    let nb = area.boundary_nodes.len();
    let ng = area.generators.len();
    let nx = nb + 1;
    let pi = nb;
    let mut h = HPolytope::empty(nx, 2 * ng);
    let mut push = |x: &[(usize, f64)], y: &[(usize, f64)], c: f64| {
        let mut a = vec![0.0; nx];
        let mut b = vec![0.0; 2 * ng];
        for &(j, v) in x {
            a[j] += v;
        }
        for &(j, v) in y {
            b[j] += v;
        }
        h.push_row(a, b, c);
    };
    let (p_g, pi_g) = (|g: usize| g, |g: usize| ng + g);

    // cost epigraph: Σ π_g ≤ π ≤ π̄
    push(&[(pi, 1.0)], &[], area.cost_cap());
    let sum_pi: Vec<(usize, f64)> = (0..ng).map(|g| (pi_g(g), 1.0)).collect();
    push(&[(pi, -1.0)], &sum_pi, 0.0);
    for (g, gen) in area.generators.iter().enumerate() {
        for s in &gen.cost_segments {
            push(&[], &[(p_g(g), s.slope), (pi_g(g), -1.0)], -s.intercept);
        }
    }

    // balance: Σ P^G − Σ P^B = Σ P^D
    let demand: f64 = area.loads.iter().sum();
    let gen_sum: Vec<(usize, f64)> = (0..ng).map(|g| (p_g(g), 1.0)).collect();
    let neg_gen: Vec<(usize, f64)> = (0..ng).map(|g| (p_g(g), -1.0)).collect();
    let bnd: Vec<(usize, f64)> = (0..nb).map(|k| (k, -1.0)).collect();
    let neg_bnd: Vec<(usize, f64)> = (0..nb).map(|k| (k, 1.0)).collect();
    push(&bnd, &gen_sum, demand);
    push(&neg_bnd, &neg_gen, -demand);

    // branch flows from net nodal injections
    for (row, &cap) in area.ptdf.iter().zip(&area.branch_caps) {
        let y: Vec<(usize, f64)> = area.generators.iter().enumerate().map(|(g, gen)| (p_g(g), row[gen.node])).collect();
        let x: Vec<(usize, f64)> = area.boundary_nodes.iter().enumerate().map(|(k, &n)| (k, -row[n])).collect();
        let load_flow: f64 = row.iter().zip(&area.loads).map(|(t, d)| t * d).sum();
        let neg = |v: &[(usize, f64)]| v.iter().map(|&(j, c)| (j, -c)).collect::<Vec<_>>();
        push(&x, &y, cap + load_flow);
        push(&neg(&x), &neg(&y), cap - load_flow);
    }

    for (g, gen) in area.generators.iter().enumerate() {
        push(&[], &[(p_g(g), 1.0)], gen.p_max);
        push(&[], &[(p_g(g), -1.0)], -gen.p_min);
    }
    for (k, limit) in area.boundary_limits().into_iter().enumerate() {
        push(&[(k, 1.0)], &[], limit);
        push(&[(k, -1.0)], &[], limit);
    }

    let status = lp::solve(&h.to_lp(vec![0.0; h.num_vars()]), None)?.status;
    if status != LpStatus::Optimal {
        return Err(Error::InfeasibleArea { area: area.id });
    }
    Ok(h)
}

pub fn compute_area_ep(area: &AreaSystem, config: &PveConfig) -> Result<PveResult> {
    pve::project(&build_area_region(area)?, config)
}

/// Area projections with the wall-clock seconds each took, in area order.
pub fn compute_area_eps(areas: &[AreaSystem], config: &PveConfig, parallel: bool) -> Result<Vec<(PveResult, f64)>> {
    let one = |a: &AreaSystem| {
        let start = Instant::now();
        compute_area_ep(a, config).map(|r| (r, start.elapsed().as_secs_f64()))
    };
    if parallel {
        areas.par_iter().map(one).collect()
    } else {
        areas.iter().map(one).collect()
    }
}

/// Column indices of the coordination block of each area, and of the tie
/// network, inside a dispatch LP.
struct Layout {
    x: Vec<Vec<usize>>,
    angles: Vec<usize>,
    flows: Vec<usize>,
}

/// Adds angles, tie flows and the per-area coordination blocks to `p`, with
/// the DC tie-line model linking them.
fn tie_network(p: &mut LpProblem, system: &MultiAreaSystem) -> Layout {
    let x: Vec<Vec<usize>> = system
        .areas
        .iter()
        .map(|a| {
            let mut v: Vec<usize> = (0..a.boundary_nodes.len()).map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
            v.push(p.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0));
            v
        })
        .collect();
    let angles: Vec<usize> = (0..system.areas.len())
        .map(|r| {
            let fixed = r == system.ties.reference_area;
            let (lo, hi) = if fixed { (0.0, 0.0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
            p.add_var(lo, hi, 0.0)
        })
        .collect();
    let ties = &system.ties.tie_lines;
    let flows: Vec<usize> = ties.iter().map(|t| p.add_var(t.flow_min, t.flow_max, 0.0)).collect();
    for (t, &f) in ties.iter().zip(&flows) {
        // x_s·P_s = θ_F − θ_T
        p.add_eq(vec![(f, t.reactance), (angles[t.from_area], -1.0), (angles[t.to_area], 1.0)], 0.0);
    }
    for (r, area) in system.areas.iter().enumerate() {
        for (k, &n) in area.boundary_nodes.iter().enumerate() {
            let mut coeffs = vec![(x[r][k], 1.0)];
            for (t, &f) in ties.iter().zip(&flows) {
                if t.from_area == r && t.from_node == n {
                    coeffs.push((f, -1.0));
                }
                if t.to_area == r && t.to_node == n {
                    coeffs.push((f, 1.0));
                }
            }
            p.add_eq(coeffs, 0.0);
        }
    }
    Layout { x, angles, flows }
}

fn read_result(system: &MultiAreaSystem, layout: &Layout, z: &[f64]) -> DispatchResult {
    let area_costs: Vec<f64> = layout.x.iter().map(|v| z[*v.last().unwrap()]).collect();
    DispatchResult {
        objective: area_costs.iter().sum(),
        area_costs,
        boundary_injections: layout.x.iter().map(|v| v[..v.len() - 1].iter().map(|&j| z[j]).collect()).collect(),
        tie_flows: layout.flows.iter().map(|&j| z[j]).collect(),
        angles: layout.angles.iter().map(|&j| z[j]).collect(),
        generator_dispatch: vec![Vec::new(); system.areas.len()],
    }
}

/// Minimizes total cost over the tie network with each area restricted to
/// its projected region.
pub fn solve_coordinator(system: &MultiAreaSystem, eps: &[PveResult]) -> Result<DispatchResult> {
    system.validate()?;
    if eps.len() != system.areas.len() {
        return Err(Error::InvalidInput(format!("{} projections for {} areas", eps.len(), system.areas.len())));
    }
    let mut p = LpProblem::new(0);
    let layout = tie_network(&mut p, system);
    for ((ep, area), vars) in eps.iter().zip(&system.areas).zip(&layout.x) {
        if ep.hull.dim != area.num_coordination() {
            return Err(Error::InvalidInput(format!(
                "area {}: projection has dimension {}, expected {}",
                area.id,
                ep.hull.dim,
                area.num_coordination()
            )));
        }
        for f in &ep.hull.facets {
            p.add_le(vars.iter().zip(&f.normal).filter(|(_, &v)| v != 0.0).map(|(&j, &v)| (j, v)).collect(), f.offset);
        }
    }
    let sol = lp::solve(&p, None)?;
    match sol.status {
        LpStatus::Optimal => Ok(read_result(system, &layout, &sol.z)),
        _ => Err(Error::InfeasibleCoordination),
    }
}

/// Cheapest internal dispatch of one area with its boundary injections fixed.
pub fn solve_regional(area: &AreaSystem, fixed_boundary: &[f64]) -> Result<RegionalDispatch> {
    let region = build_area_region(area)?;
    if fixed_boundary.len() != area.boundary_nodes.len() {
        return Err(Error::InvalidInput(format!(
            "area {}: {} boundary values for {} boundary nodes",
            area.id,
            fixed_boundary.len(),
            area.boundary_nodes.len()
        )));
    }
    let nb = area.boundary_nodes.len();
    let mut obj = vec![0.0; region.num_vars()];
    obj[nb] = -1.0;
    let mut p = region.to_lp(obj);
    for (k, &v) in fixed_boundary.iter().enumerate() {
        p.set_bounds(k, v, v);
    }
    let sol = lp::solve(&p, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::InfeasibleBoundary { subsystem: area.id });
    }
    let ng = area.generators.len();
    Ok(RegionalDispatch { generation: sol.z[nb + 1..nb + 1 + ng].to_vec(), cost: sol.z[nb] })
}

/// The monolithic dispatch over every area and the tie network.
pub fn solve_joint(system: &MultiAreaSystem) -> Result<DispatchResult> {
    system.validate()?;
    let regions: Vec<HPolytope> = system.areas.iter().map(build_area_region).collect::<Result<_>>()?;
    let mut p = LpProblem::new(0);
    let layout = tie_network(&mut p, system);
    let mut internal = Vec::new();
    for (region, x) in regions.iter().zip(&layout.x) {
        let y: Vec<usize> = (0..region.num_y).map(|_| p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
        let vars: Vec<usize> = x.iter().chain(&y).copied().collect();
        region.append_to(&mut p, &vars);
        internal.push(y);
    }
    let sol = lp::solve(&p, None)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible);
    }
    let mut out = read_result(system, &layout, &sol.z);
    out.generator_dispatch =
        system.areas.iter().zip(&internal).map(|(a, y)| y[..a.generators.len()].iter().map(|&j| sol.z[j]).collect()).collect();
    Ok(out)
}

/// The three-step protocol with its timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordination {
    pub eps: Vec<PveResult>,
    pub coordinator: DispatchResult,
    /// Coordinator schedule with realized regional costs and dispatch.
    pub dispatch: DispatchResult,
    pub ep_seconds: Vec<f64>,
    pub coordinator_seconds: f64,
    pub regional_seconds: f64,
}

/// Projects every area, solves the coordinator, then re-dispatches each area
/// at its scheduled boundary injections.
pub fn coordinate(system: &MultiAreaSystem, config: &PveConfig, parallel: bool) -> Result<Coordination> {
    system.validate()?;
    let (eps, ep_seconds): (Vec<PveResult>, Vec<f64>) = compute_area_eps(&system.areas, config, parallel)?.into_iter().unzip();
    let start = Instant::now();
    let coordinator = solve_coordinator(system, &eps)?;
    let coordinator_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let regional: Vec<RegionalDispatch> =
        system.areas.iter().zip(&coordinator.boundary_injections).map(|(a, b)| solve_regional(a, b)).collect::<Result<_>>()?;
    let regional_seconds = start.elapsed().as_secs_f64();
    let mut dispatch = coordinator.clone();
    dispatch.area_costs = regional.iter().map(|r| r.cost).collect();
    dispatch.objective = dispatch.area_costs.iter().sum();
    dispatch.generator_dispatch = regional.into_iter().map(|r| r.generation).collect();
    Ok(Coordination { eps, coordinator, dispatch, ep_seconds, coordinator_seconds, regional_seconds })
}

#[cfg(test)]
mod tests;
