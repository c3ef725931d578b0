use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_square() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]
}

fn facet_key(f: &Facet) -> Vec<f64> {
    let mut k = f.normal.clone();
    k.push(f.offset);
    k
}

fn same_facets(a: &[Facet], b: &[Facet], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|f| b.iter().any(|g| facet_key(f).iter().zip(facet_key(g)).all(|(x, y)| (x - y).abs() <= tol)))
}

fn same_vertex_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| same_point(p, q)))
}

#[test]
fn square_hull() {
    let h = build_hull(&unit_square(), 2).unwrap();
    assert_eq!(h.vertices.len(), 4);
    let expected = [
        Facet { normal: vec![-1.0, 0.0], offset: 0.0 },
        Facet { normal: vec![0.0, -1.0], offset: 0.0 },
        Facet { normal: vec![0.0, 1.0], offset: 1.0 },
        Facet { normal: vec![1.0, 0.0], offset: 1.0 },
    ];
    assert_eq!(h.facets.len(), 4);
    for (f, e) in h.facets.iter().zip(&expected) {
        assert!(facet_key(f).iter().zip(facet_key(e)).all(|(x, y)| (x - y).abs() < 1e-12), "{f:?} vs {e:?}");
    }
}

#[test]
fn collinear_points_are_degenerate() {
    let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
    assert!(matches!(build_hull(&pts, 2), Err(Error::DegenerateHull { affine_dim: 1 })));
}

#[test]
fn too_few_points_are_degenerate() {
    let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    assert!(matches!(build_hull(&pts, 3), Err(Error::DegenerateHull { affine_dim: 2 })));
}

#[test]
fn interval_hull() {
    let h = build_hull(&[vec![0.5], vec![-2.0], vec![3.0], vec![1.0]], 1).unwrap();
    assert_eq!(h.vertices, vec![vec![-2.0], vec![3.0]]);
    assert_eq!(h.facets, vec![Facet { normal: vec![-1.0], offset: 2.0 }, Facet { normal: vec![1.0], offset: 3.0 }]);
    let h = insert_vertices(&h, &[vec![4.0]]).unwrap();
    assert_eq!(h.facets[1].offset, 4.0);
}

#[test]
fn collinear_points_on_an_edge_are_not_vertices() {
    let mut pts = unit_square();
    pts.push(vec![0.5, 0.0]);
    pts.push(vec![0.5, 0.5]);
    let h = build_hull(&pts, 2).unwrap();
    assert_eq!(h.vertices.len(), 4);
    assert_eq!(h.facets.len(), 4);
}

#[test]
fn cube_faces_merge_into_six_facets() {
    let mut pts = Vec::new();
    for i in 0..8 {
        pts.push(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
    }
    pts.push(vec![0.5, 0.5, 1.0]);
    let h = build_hull(&pts, 3).unwrap();
    assert_eq!(h.vertices.len(), 8);
    assert_eq!(h.facets.len(), 6);
}

#[test]
fn lattice_cube_with_many_coplanar_points() {
    let mut pts = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                pts.push(vec![i as f64, j as f64, k as f64]);
            }
        }
    }
    let h = build_hull(&pts, 3).unwrap();
    assert_eq!(h.vertices.len(), 8);
    assert_eq!(h.facets.len(), 6);
    let mut pts4 = Vec::new();
    for i in 0..16 {
        pts4.push((0..4).map(|b| ((i >> b) & 1) as f64 * 2.0).collect::<Vec<f64>>());
    }
    pts4.push(vec![1.0, 1.0, 1.0, 2.0]);
    pts4.push(vec![1.0, 0.0, 1.0, 1.0]);
    let h = build_hull(&pts4, 4).unwrap();
    assert_eq!(h.vertices.len(), 16);
    assert_eq!(h.facets.len(), 8);
}

/// Every supporting plane through three of the points, deduplicated.
fn brute_force_facets(pts: &[Vec<f64>]) -> Vec<Facet> {
    let mut out: Vec<Facet> = Vec::new();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let u = linalg::sub(&pts[j], &pts[i]);
                let v = linalg::sub(&pts[k], &pts[i]);
                let cross = vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let Some(f) = Facet::new(cross.clone(), linalg::dot(&cross, &pts[i])) else { continue };
                let side: Vec<f64> = pts.iter().map(|p| facet_distance(&f, p)).collect();
                let candidate = if side.iter().all(|&s| s <= 1e-10) {
                    f
                } else if side.iter().all(|&s| s >= -1e-10) {
                    Facet { normal: f.normal.iter().map(|x| -x).collect(), offset: -f.offset }
                } else {
                    continue;
                };
                if !out.iter().any(|g| facet_key(g).iter().zip(facet_key(&candidate)).all(|(x, y)| (x - y).abs() < 1e-9)) {
                    out.push(candidate);
                }
            }
        }
    }
    out
}

fn ball_points(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if linalg::norm(&p) <= 1.0 {
            out.push(p);
        }
    }
    out
}

#[test]
fn ball_hull_matches_triple_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let pts = ball_points(&mut rng, 50, 3);
        let h = build_hull(&pts, 3).unwrap();
        let oracle = brute_force_facets(&pts);
        assert!(same_facets(&h.facets, &oracle, 1e-9), "{} facets vs {} oracle", h.facets.len(), oracle.len());
        for f in &h.facets {
            assert!(h.vertices.iter().all(|v| facet_distance(f, v) <= TAU_FEAS));
        }
    }
}

#[test]
fn insert_interior_point_keeps_facets() {
    let h = build_hull(&unit_square(), 2).unwrap();
    let g = insert_vertices(&h, &[vec![0.5, 0.5]]).unwrap();
    assert_eq!(g.vertices.len(), 4);
    assert!(same_facets(&h.facets, &g.facets, 1e-12));
}

#[test]
fn insert_outside_point_matches_rebuild() {
    let h = build_hull(&unit_square(), 2).unwrap();
    let g = insert_vertices(&h, &[vec![2.0, 0.5]]).unwrap();
    let mut pts = unit_square();
    pts.push(vec![2.0, 0.5]);
    let b = build_hull(&pts, 2).unwrap();
    assert_eq!(g.vertices.len(), 5);
    assert!(same_facets(&g.facets, &b.facets, 1e-12));
}

#[test]
fn insert_duplicate_vertex_is_noop() {
    let h = build_hull(&unit_square(), 2).unwrap();
    let g = insert_vertices(&h, &[vec![1.0, 1.0]]).unwrap();
    assert_eq!(h, g);
}

#[test]
fn insert_without_engine_rebuilds() {
    let h = build_hull(&unit_square(), 2).unwrap();
    let stripped = VRep { engine: None, ..h.clone() };
    let g = insert_vertices(&stripped, &[vec![2.0, 0.5]]).unwrap();
    assert_eq!(g.vertices.len(), 5);
}

#[test]
fn facet_distance_examples() {
    let f = Facet::new(vec![1.0, 0.0], 1.0).unwrap();
    assert_eq!(facet_distance(&f, &[2.0, 0.0]), 1.0);
    assert_eq!(facet_distance(&f, &[1.0, 5.0]), 0.0);
    let g = Facet::new(vec![3.0, 4.0], 5.0).unwrap();
    assert!((facet_distance(&g, &[3.0, 4.0]) - 4.0).abs() < 1e-12);
    let unnormalized = Facet { normal: vec![3.0, 4.0], offset: 5.0 };
    assert!((facet_distance(&unnormalized, &[3.0, 4.0]) - 4.0).abs() < 1e-12);
}

#[test]
fn zero_normal_rejected() {
    assert!(Facet::new(vec![0.0, 0.0], 1.0).is_none());
}

#[test]
fn contains_examples() {
    let h = build_hull(&unit_square(), 2).unwrap();
    assert!(contains(&h, &[0.5, 0.5], 0.0));
    assert!(!contains(&h, &[1.0 + 1e-6, 0.5], 1e-9));
    assert!(contains(&h, &[1.0 + 1e-6, 0.5], 1e-3));
}

#[test]
fn polytope_checks() {
    let sq = HPolytope::pure(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
    assert!(sq.is_polytope().unwrap());
    assert!(sq.x_feasibility(&[0.5, 0.5]).unwrap().0);
    assert!(!sq.x_feasibility(&[1.5, 0.5]).unwrap().0);
    let bad = HPolytope::new(1, 1, vec![vec![1.0]], vec![vec![1.0, 2.0]], vec![0.0]);
    assert!(matches!(bad, Err(Error::InvalidInput(_))));
}

#[test]
fn higher_dimensional_cross_polytope() {
    for dim in 2..=6 {
        let mut pts = Vec::new();
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; dim];
                p[i] = s;
                pts.push(p);
            }
        }
        let h = build_hull(&pts, dim).unwrap();
        assert_eq!(h.vertices.len(), 2 * dim);
        assert_eq!(h.facets.len(), 1 << dim);
    }
}

fn point_set(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), dim + 1..30)
}

fn supports_hull(h: &VRep) -> bool {
    h.facets.iter().all(|f| {
        let on = h.vertices.iter().filter(|v| facet_distance(f, v).abs() <= TAU_FEAS).count();
        on >= h.dim && h.vertices.iter().all(|v| facet_distance(f, v) <= TAU_FEAS)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn idempotent(pts in (2usize..=4).prop_flat_map(point_set)) {
        let dim = pts[0].len();
        let Ok(h) = build_hull(&pts, dim) else { return Ok(()); };
        let again = build_hull(&h.vertices, dim).unwrap();
        prop_assert!(same_vertex_sets(&h.vertices, &again.vertices));
        prop_assert!(same_facets(&h.facets, &again.facets, 1e-9));
        prop_assert!(supports_hull(&h));
        for p in &pts {
            prop_assert!(contains(&h, p, 1e-9));
        }
    }

    #[test]
    fn incremental_equals_batch(pts in (2usize..=4).prop_flat_map(point_set)) {
        let dim = pts[0].len();
        let Ok(batch) = build_hull(&pts, dim) else { return Ok(()); };
        // seed with a full-dimensional prefix, then insert the rest one at a time
        let mut k = dim + 1;
        let mut inc = loop {
            match build_hull(&pts[..k], dim) {
                Ok(h) => break h,
                Err(_) => k += 1,
            }
        };
        for p in &pts[k..] {
            inc = insert_vertices(&inc, std::slice::from_ref(p)).unwrap();
        }
        prop_assert!(same_facets(&inc.facets, &batch.facets, 1e-9));
        prop_assert!(same_vertex_sets(&inc.vertices, &batch.vertices));
    }
}
