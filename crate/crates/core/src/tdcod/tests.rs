use super::*;
use crate::fme;
use crate::geometry::build_hull;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seg(slope: f64, intercept: f64) -> CostSegment {
    CostSegment { slope, intercept }
}

fn der(node: usize, p_max: f64, segments: Vec<CostSegment>) -> Der {
    Der { node, p_min: 0.0, p_max, q_min: -0.5 * p_max, q_max: 0.5 * p_max, cost_segments: segments }
}

/// A path feeder `0 → 1 → … → n−1`.
fn path(loads: &[(f64, f64)], ders: Vec<Der>, cap: f64) -> FeederSystem {
    FeederSystem {
        id: 0,
        base_mva: 10.0,
        load_p: loads.iter().map(|l| l.0).collect(),
        load_q: loads.iter().map(|l| l.1).collect(),
        ders,
        branches: (1..loads.len()).map(|n| FeederBranch { from: n - 1, to: n, r: 0.01, x: 0.02, cap }).collect(),
        v2_min: 0.9,
        v2_max: 1.1,
        v2_root: 1.0,
        segments: DEFAULT_SEGMENTS,
        cost_cap: None,
    }
}

/// Cheapest cost on the projected region at a given export.
fn ep_min_cost(ep: &PveResult, export: f64) -> Option<f64> {
    let mut p = LpProblem::new(2);
    p.objective = vec![0.0, -1.0];
    p.set_bounds(0, export, export);
    for f in &ep.hull.facets {
        p.add_le(vec![(0, f.normal[0]), (1, f.normal[1])], f.offset);
    }
    let sol = lp::solve(&p, None).unwrap();
    sol.is_optimal().then(|| sol.z[1])
}

fn exchange_range(ep: &PveResult) -> (f64, f64) {
    let xs = ep.hull.vertices.iter().map(|v| v[0]);
    (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max))
}

#[test]
fn distflow_voltage_drop() {
    let f = FeederSystem { base_mva: 1.0, ..path(&[(0.0, 0.0), (0.1, 0.05)], Vec::new(), 1.0) };
    let d = solve_feeder_dispatch(&f, -0.1).unwrap();
    assert!((d.v2[1] - 0.996).abs() < 1e-12);
    assert!((d.flow_p[0] - 0.1).abs() < 1e-12 && (d.flow_q[0] - 0.05).abs() < 1e-12);
    // the projection is the single export −0.1 with zero cost
    let ep = compute_feeder_ep(&f, &PveConfig::default()).unwrap();
    assert!(ep.frame.is_some());
    assert!(ep.hull.vertices.iter().all(|v| (v[0] + 0.1).abs() < 1e-9));
}

#[test]
fn four_sided_capacity_polygon() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rows = capacity_rows(4, 1.0);
    let expected = [([1.0, 0.0], h), ([0.0, 1.0], h), ([-1.0, 0.0], h), ([0.0, -1.0], h)];
    for ((n, c), (en, ec)) in rows.iter().zip(&expected) {
        assert!((n[0] - en[0]).abs() < 1e-15 && (n[1] - en[1]).abs() < 1e-15 && (c - ec).abs() < 1e-15);
    }
}

#[test]
fn capacity_polygon_is_inner() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [3, 4, 8, 16] {
        let rows = capacity_rows(n, 2.0);
        let mut kept = 0;
        while kept < 2000 {
            let (p, q) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if rows.iter().all(|(a, c)| a[0] * p + a[1] * q <= *c) {
                kept += 1;
                assert!(p * p + q * q <= 4.0 + 1e-12);
            }
        }
    }
}

#[test]
fn three_node_projection_matches_fme() {
    let f = path(
        &[(0.0, 0.0), (0.05, 0.02), (0.08, 0.03)],
        vec![der(1, 0.1, vec![seg(20.0, 0.0), seg(40.0, -20.0)]), der(2, 0.12, vec![seg(30.0, 0.0)])],
        0.15,
    );
    let region = build_feeder_region(&f).unwrap();
    let ep = compute_feeder_ep(&f, &PveConfig::default()).unwrap();
    let oracle = build_hull(&fme::enumerate_vertices(&fme::exact_hrep(&region).unwrap()), 2).unwrap();
    assert_eq!(ep.hull.vertices.len(), oracle.vertices.len());
    for v in &oracle.vertices {
        assert!(ep.hull.vertices.iter().any(|w| (w[0] - v[0]).abs() < 1e-6 && (w[1] - v[1]).abs() < 1e-6));
    }
}

#[test]
fn unconstrained_feeder_traces_der_cost() {
    let d = der(1, 1.0, vec![seg(10.0, 0.0), seg(30.0, -40.0)]);
    let f = path(&[(0.0, 0.0), (0.0, 0.0)], vec![d.clone()], 5.0);
    let ep = compute_feeder_ep(&f, &PveConfig::default()).unwrap();
    let (lo, hi) = exchange_range(&ep);
    assert!(lo.abs() < 1e-9 && (hi - 10.0).abs() < 1e-9);
    for k in 0..=10 {
        let e = k as f64;
        let want = d.as_generator(10.0).cost(e);
        assert!((ep_min_cost(&ep, e).unwrap() - want).abs() < 1e-7);
    }
}

#[test]
fn binding_cap_narrows_exchange_range() {
    let d = der(1, 1.0, vec![seg(10.0, 0.0)]);
    let loose = compute_feeder_ep(&path(&[(0.0, 0.0), (0.0, 0.0)], vec![d.clone()], 5.0), &PveConfig::default()).unwrap();
    let tight = compute_feeder_ep(&path(&[(0.0, 0.0), (0.0, 0.0)], vec![d], 0.5), &PveConfig::default()).unwrap();
    let (l0, h0) = exchange_range(&loose);
    let (l1, h1) = exchange_range(&tight);
    assert!(l1 >= l0 - 1e-9 && h1 < h0 - 1.0);
}

#[test]
fn network_cost_lies_above_aggregate() {
    let f = path(
        &[(0.0, 0.0), (0.2, 0.1), (0.1, 0.05)],
        vec![der(1, 0.3, vec![seg(30.0, 0.0)]), der(2, 0.4, vec![seg(10.0, 0.0), seg(20.0, -2.0)])],
        0.3,
    );
    let ep = compute_feeder_ep(&f, &PveConfig::default()).unwrap();
    let curve = aggregate_der_cost(&f);
    let (lo, hi) = exchange_range(&ep);
    let mut strict = false;
    for k in 0..=20 {
        let e = lo + (hi - lo) * k as f64 / 20.0;
        let network = solve_feeder_dispatch(&f, e).unwrap().cost;
        assert!((ep_min_cost(&ep, e).unwrap() - network).abs() < 1e-6);
        let free = curve.evaluate(e).unwrap();
        assert!(network >= free - 1e-8);
        strict |= network > free + 1e-6;
    }
    // the branch into node 2 cannot carry all of the cheap DER's output
    assert!(strict);
}

#[test]
fn aggregate_examples() {
    let one = FeederSystem { base_mva: 1.0, ..path(&[(0.0, 0.0), (0.0, 0.0)], vec![der(1, 1.0, vec![seg(10.0, 0.0)])], 1.0) };
    assert_eq!(aggregate_der_cost(&one).breakpoints, vec![(0.0, 0.0), (1.0, 10.0)]);
    let two = FeederSystem { ders: vec![der(1, 1.0, vec![seg(20.0, 0.0)]), der(1, 1.0, vec![seg(10.0, 0.0)])], ..one.clone() };
    assert_eq!(aggregate_der_cost(&two).breakpoints, vec![(0.0, 0.0), (1.0, 10.0), (2.0, 30.0)]);
    assert_eq!(aggregate_der_cost(&two).evaluate(1.5), Some(20.0));
    assert_eq!(aggregate_der_cost(&two).evaluate(2.5), None);
}

/// Network-free cost by LP: DER epigraphs and bounds with total output fixed.
fn free_cost_lp(f: &FeederSystem, exchange: f64) -> f64 {
    let n = f.ders.len();
    let mut p = LpProblem::new(2 * n);
    for (g, d) in f.ders.iter().enumerate() {
        p.set_bounds(g, d.p_min * f.base_mva, d.p_max * f.base_mva);
        p.objective[n + g] = -1.0;
        for s in &d.cost_segments {
            p.add_le(vec![(g, s.slope), (n + g, -1.0)], -s.intercept);
        }
    }
    let demand: f64 = f.load_p.iter().sum::<f64>() * f.base_mva;
    p.add_eq((0..n).map(|g| (g, 1.0)).collect(), exchange + demand);
    -lp::solve(&p, None).unwrap().objective_value
}

#[test]
fn aggregate_matches_lp_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let ders: Vec<Der> = (0..rng.gen_range(1..5))
            .map(|_| {
                let mut slopes: Vec<f64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1.0..50.0)).collect();
                slopes.sort_by(f64::total_cmp);
                let segs = slopes.iter().map(|&s| seg(s, rng.gen_range(-5.0..5.0))).collect();
                Der { p_min: rng.gen_range(0.0..0.05), ..der(1, rng.gen_range(0.1..0.5), segs) }
            })
            .collect();
        let f = path(&[(0.0, 0.0), (rng.gen_range(0.0..0.2), 0.0)], ders, 1.0);
        let curve = aggregate_der_cost(&f);
        let (lo, hi) = (curve.breakpoints[0].0, curve.breakpoints.last().unwrap().0);
        for k in 0..=25 {
            let e = lo + (hi - lo) * k as f64 / 25.0;
            let lp = free_cost_lp(&f, e);
            assert!((curve.evaluate(e).unwrap() - lp).abs() < 1e-7 * (1.0 + lp.abs()), "{e}: {lp}");
        }
    }
}

fn tn(cap: f64) -> TransmissionSystem {
    TransmissionSystem {
        generators: vec![Generator { node: 0, p_min: 0.0, p_max: 100.0, cost_segments: vec![seg(100.0, 0.0)] }],
        loads: vec![50.0, 0.0],
        // flow on branch 0 → 1 from an injection at node 1 (slack at node 0)
        ptdf: vec![vec![0.0, -1.0]],
        branch_caps: vec![cap],
        feeder_nodes: vec![1],
    }
}

fn cheap_feeder() -> FeederSystem {
    path(&[(0.0, 0.0), (0.1, 0.02), (0.1, 0.02)], vec![der(1, 0.8, vec![seg(10.0, 0.0)]), der(2, 0.8, vec![seg(12.0, 0.0)])], 0.6)
}

#[test]
fn feeder_exports_to_its_limit() {
    let system = TdSystem { transmission: tn(100.0), feeders: vec![cheap_feeder()] };
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    let (_, hi) = exchange_range(&out.eps[0]);
    assert!((out.dispatch.feeder_exports[0] - hi).abs() < 1e-7);
    let joint = solve_joint_td(&system).unwrap();
    assert!((out.dispatch.objective - joint.objective).abs() <= 1e-6 * joint.objective.abs());
    assert!((out.coordinator.objective - joint.objective).abs() <= 1e-6 * joint.objective.abs());
}

#[test]
fn congested_attachment_limits_export() {
    let system = TdSystem { transmission: tn(2.5), feeders: vec![cheap_feeder()] };
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    assert!((out.dispatch.feeder_exports[0] - 2.5).abs() < 1e-7);
    let joint = solve_joint_td(&system).unwrap();
    assert!((out.dispatch.objective - joint.objective).abs() <= 1e-6 * joint.objective.abs());
}

#[test]
fn no_feeders_is_plain_dc_opf() {
    let mut t = tn(30.0);
    t.feeder_nodes.clear();
    t.generators.push(Generator { node: 1, p_min: 0.0, p_max: 100.0, cost_segments: vec![seg(20.0, 0.0)] });
    let system = TdSystem { transmission: t, feeders: Vec::new() };
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    // the cheap unit at node 1 is held to the 30 MW line limit
    assert!((out.dispatch.objective - (30.0 * 20.0 + 20.0 * 100.0)).abs() < 1e-7);
    assert!((solve_joint_td(&system).unwrap().objective - out.dispatch.objective).abs() < 1e-7);
}

#[test]
fn feeder_dispatch_examples() {
    let f = cheap_feeder();
    let off = solve_feeder_dispatch(&f, -2.0).unwrap();
    assert!(off.cost.abs() < 1e-9 && off.der_p.iter().all(|p| p.abs() < 1e-9));
    let ep = compute_feeder_ep(&f, &PveConfig::default()).unwrap();
    let (_, hi) = exchange_range(&ep);
    let d = solve_feeder_dispatch(&f, hi).unwrap();
    let cap_active = d
        .flow_p
        .iter()
        .zip(&d.flow_q)
        .zip(&f.branches)
        .any(|((p, q), br)| capacity_rows(f.segments, br.cap).iter().any(|(a, c)| (a[0] * p + a[1] * q - c).abs() < 1e-7));
    let der_active = d.der_p.iter().zip(&f.ders).any(|(p, g)| (p - g.p_max).abs() < 1e-9);
    let v_active = d.v2.iter().any(|v| (v - f.v2_max).abs() < 1e-9 || (v - f.v2_min).abs() < 1e-9);
    assert!(cap_active || der_active || v_active);
    assert!(matches!(solve_feeder_dispatch(&f, hi + 1.0), Err(Error::InfeasibleBoundary { subsystem: 0 })));
}

#[test]
fn voltages_follow_distflow() {
    let f = cheap_feeder();
    let d = solve_feeder_dispatch(&f, 3.0).unwrap();
    for (b, br) in f.branches.iter().enumerate() {
        let drop = 2.0 * (br.r * d.flow_p[b] + br.x * d.flow_q[b]);
        assert!((d.v2[br.from] - d.v2[br.to] - drop).abs() < 1e-8);
    }
    assert!(d.v2.iter().all(|v| (f.v2_min - 1e-8..=f.v2_max + 1e-8).contains(v)));
}

#[test]
fn topology_checks() {
    let mut f = cheap_feeder();
    f.branches[1].from = 2;
    assert!(matches!(f.validate(), Err(Error::NonRadial { .. })));
    let mut f = cheap_feeder();
    f.branches[1].to = 1;
    assert!(matches!(f.validate(), Err(Error::NonRadial { .. })));
    let mut f = cheap_feeder();
    f.branches.pop();
    assert!(matches!(f.validate(), Err(Error::NonRadial { .. })));
    let mut f = cheap_feeder();
    f.segments = 2;
    assert!(matches!(f.validate(), Err(Error::InvalidInput(_))));
}

#[test]
fn overloaded_feeder_is_named() {
    let mut f = cheap_feeder();
    f.id = 4;
    f.load_p[2] = 2.0;
    assert!(matches!(build_feeder_region(&f), Err(Error::InfeasibleFeeder { feeder: 4 })));
}
