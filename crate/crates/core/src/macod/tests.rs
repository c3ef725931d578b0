use super::*;
use crate::cost::CostSegment;
use crate::fme;
use crate::geometry::build_hull;

fn single_node(id: usize, slope: f64, load: f64, boundary: bool) -> AreaSystem {
    AreaSystem {
        id,
        generators: vec![Generator { node: 0, p_min: 0.0, p_max: 100.0, cost_segments: vec![CostSegment { slope, intercept: 0.0 }] }],
        loads: vec![load],
        ptdf: Vec::new(),
        branch_caps: Vec::new(),
        boundary_nodes: if boundary { vec![0] } else { Vec::new() },
        cost_cap: Some(2000.0),
        boundary_limits: None,
    }
}

fn pair(cap: f64) -> MultiAreaSystem {
    let mut cheap = single_node(0, 10.0, 50.0, true);
    let mut dear = single_node(1, 50.0, 50.0, true);
    cheap.cost_cap = None;
    dear.cost_cap = None;
    MultiAreaSystem {
        areas: vec![cheap, dear],
        ties: TieLineSystem {
            tie_lines: vec![TieLine { from_area: 0, to_area: 1, from_node: 0, to_node: 0, reactance: 0.1, flow_min: -cap, flow_max: cap }],
            reference_area: 0,
        },
    }
}

fn has(vs: &[Vec<f64>], p: &[f64]) -> bool {
    vs.iter().any(|v| v.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-7))
}

#[test]
fn single_node_projection() {
    let area = single_node(0, 10.0, 20.0, true);
    let region = build_area_region(&area).unwrap();
    assert_eq!((region.num_x, region.num_y), (2, 2));
    let ep = compute_area_ep(&area, &PveConfig::default()).unwrap();
    let expected = [[-20.0, 0.0], [80.0, 1000.0], [80.0, 2000.0], [-20.0, 2000.0]];
    assert_eq!(ep.hull.vertices.len(), 4);
    for v in &expected {
        assert!(has(&ep.hull.vertices, v), "missing {v:?}");
    }
    let oracle = fme::enumerate_vertices(&fme::exact_hrep(&region).unwrap());
    let oracle = build_hull(&oracle, 2).unwrap();
    assert_eq!(oracle.vertices.len(), 4);
    assert!(oracle.vertices.iter().all(|v| has(&ep.hull.vertices, v)));
}

#[test]
fn zero_load_keeps_origin() {
    let ep = compute_area_ep(&single_node(0, 10.0, 0.0, true), &PveConfig::default()).unwrap();
    assert!(has(&ep.hull.vertices, &[0.0, 0.0]));
}

#[test]
fn infeasible_area_is_named() {
    let isolated = single_node(7, 10.0, 150.0, false);
    assert!(matches!(build_area_region(&isolated), Err(Error::InfeasibleArea { area: 7 })));
    // import through node 1 is limited by the branch feeding node 0
    let mut congested = single_node(3, 10.0, 0.0, false);
    congested.loads = vec![150.0, 0.0];
    congested.boundary_nodes = vec![1];
    congested.ptdf = vec![vec![0.0, -1.0]];
    congested.branch_caps = vec![20.0];
    assert!(matches!(build_area_region(&congested), Err(Error::InfeasibleArea { area: 3 })));
    congested.branch_caps = vec![60.0];
    assert!(build_area_region(&congested).is_ok());
    // load beyond generation plus the import limit
    let mut limited = single_node(4, 10.0, 150.0, true);
    limited.boundary_limits = Some(vec![40.0]);
    assert!(matches!(build_area_region(&limited), Err(Error::InfeasibleArea { area: 4 })));
    limited.boundary_limits = Some(vec![50.0]);
    assert!(build_area_region(&limited).is_ok());
}

#[test]
fn boundary_limits_bound_the_projection() {
    let mut area = single_node(0, 10.0, 20.0, true);
    area.boundary_limits = Some(vec![30.0]);
    let ep = compute_area_ep(&area, &PveConfig::default()).unwrap();
    let expected = [[-20.0, 0.0], [30.0, 500.0], [30.0, 2000.0], [-20.0, 2000.0]];
    assert_eq!(ep.hull.vertices.len(), 4);
    assert!(expected.iter().all(|p| has(&ep.hull.vertices, p)));
    let mut bad = area.clone();
    bad.boundary_limits = Some(vec![30.0, 1.0]);
    assert!(build_area_region(&bad).is_err());
    bad.boundary_limits = Some(vec![-1.0]);
    assert!(build_area_region(&bad).is_err());
}

#[test]
fn no_internal_variables_means_no_reduction() {
    let mut h = HPolytope::empty(1, 0);
    h.push_row(vec![1.0], vec![], 1.0);
    h.push_row(vec![-1.0], vec![], 0.0);
    let ep = pve::project(&h, &PveConfig::default()).unwrap();
    assert_eq!(crate::cost::reduction_rate(&h, &ep), 0.0);
}

#[test]
fn regional_dispatch_examples() {
    let area = single_node(0, 10.0, 20.0, true);
    let r = solve_regional(&area, &[80.0]).unwrap();
    assert!((r.generation[0] - 100.0).abs() < 1e-9 && (r.cost - 1000.0).abs() < 1e-9);
    let r = solve_regional(&area, &[-20.0]).unwrap();
    assert!(r.generation[0].abs() < 1e-9 && r.cost.abs() < 1e-9);
    assert!(matches!(solve_regional(&area, &[90.0]), Err(Error::InfeasibleBoundary { subsystem: 0 })));
}

#[test]
fn cheap_area_exports_to_tie_limit() {
    let system = pair(30.0);
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    let joint = solve_joint(&system).unwrap();
    assert!((out.coordinator.tie_flows[0] - 30.0).abs() < 1e-7);
    assert!((joint.objective - (10.0 * 80.0 + 50.0 * 20.0)).abs() < 1e-7);
    assert!((out.coordinator.objective - joint.objective).abs() < 1e-7);
    assert!((out.dispatch.objective - joint.objective).abs() < 1e-7);
    assert!((out.dispatch.generator_dispatch[0][0] - 80.0).abs() < 1e-7);
}

#[test]
fn closed_tie_gives_isolated_optima() {
    let system = pair(0.0);
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    assert!((out.dispatch.objective - (500.0 + 2500.0)).abs() < 1e-7);
    assert!((solve_joint(&system).unwrap().objective - 3000.0).abs() < 1e-7);
}

#[test]
fn ring_matches_joint() {
    let mut areas = vec![single_node(0, 10.0, 60.0, true), single_node(1, 30.0, 60.0, true), single_node(2, 50.0, 60.0, true)];
    areas.iter_mut().for_each(|a| a.cost_cap = None);
    let tie = |f: usize, t: usize, x: f64| TieLine {
        from_area: f,
        to_area: t,
        from_node: 0,
        to_node: 0,
        reactance: x,
        flow_min: -25.0,
        flow_max: 25.0,
    };
    let system = MultiAreaSystem {
        areas,
        ties: TieLineSystem { tie_lines: vec![tie(0, 1, 0.1), tie(1, 2, 0.2), tie(2, 0, 0.1)], reference_area: 0 },
    };
    let out = coordinate(&system, &PveConfig::default(), false).unwrap();
    let joint = solve_joint(&system).unwrap();
    assert!((out.dispatch.objective - joint.objective).abs() <= 1e-6 * joint.objective.abs());
    // loop flow: Σ x_s P_s around the ring is zero
    let loop_sum: f64 = system.ties.tie_lines.iter().zip(&out.coordinator.tie_flows).map(|(t, f)| t.reactance * f).sum();
    assert!(loop_sum.abs() < 1e-7);
    let gen: f64 = out.dispatch.generator_dispatch.iter().flatten().sum();
    assert!((gen - 180.0).abs() < 1e-6);
}

#[test]
fn malformed_systems_are_rejected() {
    let mut system = pair(10.0);
    system.ties.tie_lines[0].to_node = 3;
    assert!(matches!(system.validate(), Err(Error::InvalidInput(_))));
    let mut system = pair(10.0);
    system.ties.tie_lines[0].reactance = 0.0;
    assert!(system.validate().is_err());
    let mut area = single_node(0, 10.0, 0.0, true);
    area.ptdf = vec![vec![1.0, 2.0]];
    area.branch_caps = vec![1.0];
    assert!(area.validate().is_err());
}
