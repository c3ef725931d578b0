//! Seeded generators for random test systems.
//!
//! Every generator draws from a ChaCha stream fixed by its seed, so the same
//! parameters always give the same system. Sizes are clamped to the ranges
//! noted on each function.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostSegment, Generator};
use crate::geometry::HPolytope;
use crate::macod::{AreaSystem, MultiAreaSystem, TieLine, TieLineSystem};
use crate::tdcod::{Der, FeederBranch, FeederSystem, TdSystem, TransmissionSystem, DEFAULT_SEGMENTS};

const FEEDER_BASE_MVA: f64 = 10.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bounded region `A·x + B·y ≤ c` with entries in `[−1, 1]` and
/// right-hand sides in `[0.5, 1.5]`, so the origin is interior. Draws are
/// repeated until the region is bounded; `rows` is raised to at least
/// `nx + ny + 1`.
pub fn random_polytope(nx: usize, ny: usize, rows: usize, rng: &mut ChaCha8Rng) -> HPolytope {
    let nx = nx.clamp(1, 8);
    let dim = nx + ny;
    let rows = rows.max(dim + 1);
    loop {
        let mut h = HPolytope::empty(nx, ny);
        for _ in 0..rows {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            h.push_row(row[..nx].to_vec(), row[nx..].to_vec(), rng.gen_range(0.5..1.5));
        }
        if h.is_polytope().unwrap_or(false) {
            return h;
        }
    }
}

/// Connected network: a random spanning tree plus about `n/4` chords, as
/// `(from, to, reactance)`.
fn random_network(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut lines = Vec::new();
    for k in 1..n {
        lines.push((rng.gen_range(0..k), k, rng.gen_range(0.05..0.4)));
    }
    for _ in 0..n / 4 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !lines.iter().any(|&(f, t, _)| (f, t) == (a, b) || (f, t) == (b, a)) {
            lines.push((a.min(b), a.max(b), rng.gen_range(0.05..0.4)));
        }
    }
    lines
}

/// DC power transfer distribution factors with node 0 as the slack: entry
/// `[l][n]` is the flow on line `l` (from → to) per unit injected at `n` and
/// withdrawn at the slack.
pub fn ptdf(n: usize, lines: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    if n <= 1 {
        return vec![vec![0.0; n]; lines.len()];
    }
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for &(f, t, x) in lines {
        let y = 1.0 / x;
        for (i, j, v) in [(f, f, y), (t, t, y), (f, t, -y), (t, f, -y)] {
            if i > 0 && j > 0 {
                b[(i - 1, j - 1)] += v;
            }
        }
    }
    let inv = b.try_inverse().expect("connected network has a nonsingular reduced susceptance matrix");
    let theta = |node: usize, inj: usize| if node == 0 { 0.0 } else { inv[(node - 1, inj - 1)] };
    lines
        .iter()
        .map(|&(f, t, x)| {
            let mut row = vec![0.0; n];
            for (inj, v) in row.iter_mut().enumerate().skip(1) {
                *v = (theta(f, inj) - theta(t, inj)) / x;
            }
            row
        })
        .collect()
}

/// Continuous convex cost with 1–3 pieces over `[p_min, p_max]`.
fn random_cost(p_min: f64, p_max: f64, slope_range: (f64, f64), rng: &mut ChaCha8Rng) -> Vec<CostSegment> {
    let pieces = rng.gen_range(1..=3);
    let mut slope = rng.gen_range(slope_range.0..slope_range.1);
    let mut segments = vec![CostSegment { slope, intercept: rng.gen_range(0.0..20.0) }];
    for k in 1..pieces {
        let at = p_min + (p_max - p_min) * k as f64 / pieces as f64;
        let prev = *segments.last().unwrap();
        slope += rng.gen_range(2.0..15.0);
        segments.push(CostSegment { slope, intercept: prev.intercept + (prev.slope - slope) * at });
    }
    segments
}

fn random_generators(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Generator> {
    (0..count)
        .map(|_| {
            let p_max = rng.gen_range(20.0..100.0);
            let p_min = if rng.gen_bool(0.3) { rng.gen_range(0.0..0.2) * p_max } else { 0.0 };
            Generator { node: rng.gen_range(0..n), p_min, p_max, cost_segments: random_cost(p_min, p_max, (10.0, 60.0), rng) }
        })
        .collect()
}

/// Loads summing to `total`, spread over random nodes.
fn random_loads(n: usize, total: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.7) { rng.gen_range(0.2..1.0) } else { 0.0 }).collect();
    let sum: f64 = weights.iter().sum::<f64>().max(1e-9);
    if weights.iter().all(|&w| w == 0.0) {
        let mut loads = vec![0.0; n];
        loads[0] = total;
        return loads;
    }
    weights.iter().map(|w| total * w / sum).collect()
}

/// Ratings that load each branch to 25–45% in a dispatch covering the given
/// net withdrawals, so that dispatch stays feasible.
fn caps_from_base(ptdf: &[Vec<f64>], injection: &[f64], floor: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    ptdf.iter()
        .map(|row| {
            let flow: f64 = row.iter().zip(injection).map(|(t, p)| t * p).sum();
            (flow.abs() * rng.gen_range(2.2..4.0)).max(floor)
        })
        .collect()
}

/// An area of `nodes` nodes (clamped to 1..=200) able to serve its own load.
/// Boundary nodes are left empty.
pub fn random_area(id: usize, nodes: usize, rng: &mut ChaCha8Rng) -> AreaSystem {
    let n = nodes.clamp(1, 200);
    let lines = random_network(n, rng);
    let generators = random_generators(n, (n / 3).max(1), rng);
    let cap: f64 = generators.iter().map(|g| g.p_max).sum();
    let loads = random_loads(n, rng.gen_range(0.3..0.8) * cap, rng);
    let injection = base_injection(n, &generators, &loads);
    let ptdf = ptdf(n, &lines);
    let total: f64 = loads.iter().sum();
    let branch_caps = caps_from_base(&ptdf, &injection, 0.05 * total + 1.0, rng);
    AreaSystem { id, generators, loads, ptdf, branch_caps, boundary_nodes: Vec::new(), cost_cap: None, boundary_limits: None }
}

/// Nodal injections when every unit runs at the same fraction of its range
/// and together they cover the load exactly.
fn base_injection(n: usize, generators: &[Generator], loads: &[f64]) -> Vec<f64> {
    let demand: f64 = loads.iter().sum();
    let min: f64 = generators.iter().map(|g| g.p_min).sum();
    let range: f64 = generators.iter().map(|g| g.p_max - g.p_min).sum();
    let frac = if range > 0.0 { ((demand - min) / range).clamp(0.0, 1.0) } else { 0.0 };
    let mut inj: Vec<f64> = loads.iter().map(|d| -d).collect();
    inj.resize(n, 0.0);
    for g in generators {
        inj[g.node] += g.p_min + frac * (g.p_max - g.p_min);
    }
    inj
}

/// `areas` areas (clamped to 2..=20) of `min_nodes..=max_nodes` nodes each
/// (clamped to 1..=200), tied in a ring (a single tie for two areas) plus a
/// few chords. Each area uses at most `max_boundary` boundary nodes.
pub fn multi_area(areas: usize, min_nodes: usize, max_nodes: usize, max_boundary: usize, seed: u64) -> MultiAreaSystem {
    let mut rng = rng(seed);
    let r = areas.clamp(2, 20);
    let lo = min_nodes.clamp(1, 200);
    let hi = max_nodes.clamp(lo, 200);
    let mut list: Vec<AreaSystem> = (0..r).map(|id| random_area(id, rng.gen_range(lo..=hi), &mut rng)).collect();
    let candidates: Vec<Vec<usize>> = list
        .iter()
        .map(|a| {
            let mut nodes: Vec<usize> = (0..a.num_nodes()).collect();
            nodes.shuffle(&mut rng);
            nodes.truncate(max_boundary.max(1));
            nodes
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = if r == 2 { vec![(0, 1)] } else { (0..r).map(|k| (k, (k + 1) % r)).collect() };
    for _ in 0..r / 3 {
        let (a, b) = (rng.gen_range(0..r), rng.gen_range(0..r));
        if a != b {
            pairs.push((a, b));
        }
    }
    let tie_lines: Vec<TieLine> = pairs
        .into_iter()
        .map(|(a, b)| {
            let cap = rng.gen_range(10.0..60.0);
            TieLine {
                from_area: a,
                to_area: b,
                from_node: *candidates[a].choose(&mut rng).unwrap(),
                to_node: *candidates[b].choose(&mut rng).unwrap(),
                reactance: rng.gen_range(0.05..0.3),
                flow_min: -cap,
                flow_max: cap,
            }
        })
        .collect();
    for (k, area) in list.iter_mut().enumerate() {
        let mut used: Vec<usize> = tie_lines
            .iter()
            .flat_map(|t| [(t.from_area, t.from_node), (t.to_area, t.to_node)])
            .filter(|&(a, _)| a == k)
            .map(|(_, n)| n)
            .collect();
        used.sort_unstable();
        used.dedup();
        let limits = used
            .iter()
            .map(|&n| {
                let attached = tie_lines.iter().filter(|t| (t.from_area, t.from_node) == (k, n) || (t.to_area, t.to_node) == (k, n));
                attached.map(|t| t.flow_max.abs().max(t.flow_min.abs())).sum()
            })
            .collect();
        area.boundary_nodes = used;
        area.boundary_limits = Some(limits);
    }
    MultiAreaSystem { areas: list, ties: TieLineSystem { tie_lines, reference_area: 0 } }
}

/// A single area with exactly `boundary` boundary nodes (clamped to the node
/// count), each limited like a single tie-line, for model-size measurements.
pub fn area_with_boundary(nodes: usize, boundary: usize, seed: u64) -> AreaSystem {
    let mut rng = rng(seed);
    let mut area = random_area(0, nodes, &mut rng);
    let mut all: Vec<usize> = (0..area.num_nodes()).collect();
    all.shuffle(&mut rng);
    all.truncate(boundary.min(area.num_nodes()));
    all.sort_unstable();
    area.boundary_limits = Some(all.iter().map(|_| rng.gen_range(10.0..60.0)).collect());
    area.boundary_nodes = all;
    area
}

/// Squared voltages at zero DER output from the DistFlow recursion.
pub fn no_der_voltages(f: &FeederSystem) -> Vec<f64> {
    let n = f.num_nodes();
    // downstream demand of each node, children after parents in branch order
    let mut p = f.load_p.clone();
    let mut q = f.load_q.clone();
    for br in f.branches.iter().rev() {
        p[br.from] += p[br.to];
        q[br.from] += q[br.to];
    }
    let mut v2 = vec![f.v2_root; n];
    for br in &f.branches {
        v2[br.to] = v2[br.from] - 2.0 * (br.r * p[br.to] + br.x * q[br.to]);
    }
    v2
}

/// A radial feeder of `nodes` nodes (clamped to 2..=100) on a 10 MVA base,
/// with 2–4 DERs and branches listed parent-first. Impedances are scaled
/// down if needed so that voltages stay above 0.95² p.u. at zero DER output.
pub fn random_feeder(id: usize, nodes: usize, rng: &mut ChaCha8Rng) -> FeederSystem {
    let n = nodes.clamp(2, 100);
    let load_p: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { rng.gen_range(0.01..0.06) }).collect();
    let load_q: Vec<f64> = load_p.iter().map(|p| p * rng.gen_range(0.2..0.5)).collect();
    let mut branches: Vec<FeederBranch> = (1..n)
        .map(|k| FeederBranch { from: rng.gen_range(0..k), to: k, r: rng.gen_range(0.003..0.01), x: rng.gen_range(0.005..0.02), cap: 0.0 })
        .collect();
    let ders: Vec<Der> = (0..rng.gen_range(2..=4))
        .map(|_| {
            let p_max = rng.gen_range(0.1..0.4);
            let q = 0.5 * p_max;
            Der {
                node: rng.gen_range(1..n),
                p_min: 0.0,
                p_max,
                q_min: -q,
                q_max: q,
                cost_segments: random_cost(0.0, p_max * FEEDER_BASE_MVA, (5.0, 40.0), rng),
            }
        })
        .collect();
    // caps between the downstream load and a share of downstream DER output
    let mut down_load = load_p.clone();
    let mut down_der = vec![0.0; n];
    for d in &ders {
        down_der[d.node] += d.p_max;
    }
    for br in branches.iter().rev() {
        down_load[br.from] += down_load[br.to];
        down_der[br.from] += down_der[br.to];
    }
    for br in branches.iter_mut() {
        let need = down_load[br.to] * 1.3;
        br.cap = need.max(rng.gen_range(0.4..1.2) * down_der[br.to]).max(0.05);
    }
    let mut f = FeederSystem {
        id,
        base_mva: FEEDER_BASE_MVA,
        load_p,
        load_q,
        ders,
        branches,
        v2_min: 0.95f64.powi(2),
        v2_max: 1.05f64.powi(2),
        v2_root: 1.0,
        segments: DEFAULT_SEGMENTS,
        cost_cap: None,
    };
    let lowest = no_der_voltages(&f).into_iter().fold(f64::INFINITY, f64::min);
    let floor = 0.95f64.powi(2) + 0.01;
    if lowest < floor {
        let scale = (1.0 - floor) / (1.0 - lowest);
        for br in f.branches.iter_mut() {
            br.r *= scale;
            br.x *= scale;
        }
    }
    f
}

/// A transmission system of `tn_nodes` nodes (clamped to 2..=200) with
/// `feeders` feeders (clamped to 0..=200) of `feeder_nodes` nodes each.
pub fn td_system(tn_nodes: usize, feeders: usize, feeder_nodes: usize, seed: u64) -> TdSystem {
    let mut rng = rng(seed);
    let n = tn_nodes.clamp(2, 200);
    let feeders: Vec<FeederSystem> = (0..feeders.min(200)).map(|id| random_feeder(id, feeder_nodes, &mut rng)).collect();
    let feeder_nodes: Vec<usize> = feeders.iter().map(|_| rng.gen_range(0..n)).collect();
    let lines = random_network(n, &mut rng);
    let generators = random_generators(n, (n / 3).max(1), &mut rng);
    let cap: f64 = generators.iter().map(|g| g.p_max).sum();
    let feeder_load: f64 = feeders.iter().map(|f| f.load_p.iter().sum::<f64>() * f.base_mva).sum();
    let share = rng.gen_range(0.3..0.6);
    let loads = random_loads(n, (share * cap - feeder_load).max(0.0), &mut rng);
    // feeders draw their demand at their attachment nodes in the base case
    let mut withdrawals = loads.clone();
    for (f, &node) in feeders.iter().zip(&feeder_nodes) {
        withdrawals[node] += f.load_p.iter().sum::<f64>() * f.base_mva;
    }
    let injection = base_injection(n, &generators, &withdrawals);
    let ptdf = ptdf(n, &lines);
    let total: f64 = withdrawals.iter().sum();
    let branch_caps = caps_from_base(&ptdf, &injection, 0.05 * total + 1.0, &mut rng);
    TdSystem { transmission: TransmissionSystem { generators, loads, ptdf, branch_caps, feeder_nodes }, feeders }
}
