use super::*;
use proptest::prelude::*;

fn le_problem(objective: Vec<f64>, g: &[Vec<f64>], rhs: &[f64]) -> LpProblem {
    let n = objective.len();
    LpProblem::from_dense(objective, g, rhs, vec![(f64::NEG_INFINITY, f64::INFINITY); n])
}

#[test]
fn max_x_with_upper_bound() {
    let p = le_problem(vec![1.0], &[vec![1.0], vec![-1.0]], &[1.0, 0.0]);
    let s = solve(&p, None).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.z[0] - 1.0).abs() < 1e-12);
    assert!((s.objective_value - 1.0).abs() < 1e-12);
}

#[test]
fn max_x_without_upper_bound_is_unbounded() {
    let p = le_problem(vec![1.0], &[vec![-1.0]], &[0.0]);
    assert_eq!(solve(&p, None).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn infeasible_system_reported() {
    let p = le_problem(vec![1.0], &[vec![1.0], vec![-1.0]], &[0.0, -1.0]);
    assert_eq!(solve(&p, None).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn warm_start_from_other_objective() {
    let g = vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
    let rhs = [1.0, 0.0, 0.0];
    let first = solve(&le_problem(vec![1.0, 0.0], &g, &rhs), None).unwrap();
    let p = le_problem(vec![1.0, 1.0], &g, &rhs);
    let warm = solve(&p, first.basis.as_ref()).unwrap();
    let cold = solve(&p, None).unwrap();
    assert_eq!(warm.status, LpStatus::Optimal);
    assert!((warm.objective_value - 1.0).abs() < 1e-12);
    assert!((warm.z[0] + warm.z[1] - 1.0).abs() < 1e-12);
    assert!((warm.objective_value - cold.objective_value).abs() < 1e-12);
}

#[test]
fn mismatched_basis_falls_back_to_cold() {
    let a = solve(&le_problem(vec![1.0], &[vec![1.0], vec![-1.0]], &[3.0, 0.0]), None).unwrap();
    let p = le_problem(vec![1.0, 2.0], &[vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]], &[2.0, 0.0, 0.0]);
    let s = solve(&p, a.basis.as_ref()).unwrap();
    assert!((s.objective_value - 4.0).abs() < 1e-12);
}

#[test]
fn variable_bounds_and_equalities() {
    let mut p = LpProblem::new(3);
    p.objective = vec![1.0, 2.0, -1.0];
    p.set_bounds(0, 0.0, 4.0);
    p.set_bounds(1, -1.0, 1.0);
    p.set_bounds(2, 0.0, f64::INFINITY);
    p.add_eq(vec![(0, 1.0), (1, 1.0), (2, -1.0)], 2.0);
    let s = solve(&p, None).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    // x2 = x0 + x1 − 2, objective = 2 + x1 ... best at x1 = 1, any x0 ≥ 1
    assert!((s.objective_value - 3.0).abs() < 1e-9, "{s:?}");
    assert!(p.max_violation(&s.z) < 1e-9);
}

#[test]
fn lexicographic_picks_corner_of_optimal_face() {
    let g = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let p = le_problem(vec![1.0, 0.0], &g, &[1.0, 0.0, 1.0, 0.0]);
    let s = solve_lexicographic(&p, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap();
    assert!((s.z[0] - 1.0).abs() < 1e-12 && (s.z[1] - 1.0).abs() < 1e-12);
    let s = solve_lexicographic(&p, &[vec![1.0, 0.0], vec![0.0, -1.0]], None).unwrap();
    assert!((s.z[0] - 1.0).abs() < 1e-12 && s.z[1].abs() < 1e-12);
}

#[test]
fn degenerate_cycling_prone_problem() {
    // Beale's classic cycling example, stated as maximization
    let g = vec![vec![0.25, -60.0, -0.04, 9.0], vec![0.5, -90.0, -0.02, 3.0], vec![0.0, 0.0, 1.0, 0.0]];
    let mut p = LpProblem::from_dense(vec![0.75, -150.0, 0.02, -6.0], &g, &[0.0, 0.0, 1.0], vec![(0.0, f64::INFINITY); 4]);
    p.objective = vec![0.75, -150.0, 0.02, -6.0];
    let s = solve(&p, None).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective_value - 0.05).abs() < 1e-9, "{}", s.objective_value);
}

#[test]
fn rejects_malformed_problem() {
    let mut p = LpProblem::new(1);
    p.add_le(vec![(3, 1.0)], 1.0);
    assert!(matches!(solve(&p, None), Err(LpError::ColumnOutOfRange { .. })));
}

#[test]
fn redundant_dominated_bound() {
    let p = le_problem(vec![0.0], &[vec![1.0], vec![1.0], vec![-1.0]], &[1.0, 2.0, 0.0]);
    assert_eq!(remove_redundant_rows(&p).unwrap(), Some(vec![true, false, true]));
}

#[test]
fn redundant_box_rows_under_simplex_cut() {
    let g = vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
    let p = le_problem(vec![0.0, 0.0], &g, &[1.0, 1.0, 1.0, 0.0, 0.0]);
    assert_eq!(remove_redundant_rows(&p).unwrap(), Some(vec![true, false, false, true, true]));
}

#[test]
fn irredundant_system_unchanged() {
    let g = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let p = le_problem(vec![0.0, 0.0], &g, &[1.0, 0.0, 1.0, 0.0]);
    assert_eq!(remove_redundant_rows(&p).unwrap(), Some(vec![true; 4]));
}

#[test]
fn duplicate_rows_keep_one() {
    let p = le_problem(vec![0.0], &[vec![1.0], vec![2.0], vec![-1.0]], &[1.0, 2.0, 0.0]);
    let keep = remove_redundant_rows(&p).unwrap().unwrap();
    assert_eq!(keep.iter().filter(|k| **k).count(), 2);
    assert!(keep[2]);
}

#[test]
fn redundancy_of_infeasible_system() {
    let p = le_problem(vec![0.0], &[vec![1.0], vec![-1.0]], &[0.0, -1.0]);
    assert_eq!(remove_redundant_rows(&p).unwrap(), None);
}

#[test]
fn boundedness() {
    let sq = le_problem(vec![0.0, 0.0], &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]], &[1.0, 0.0, 1.0, 0.0]);
    assert!(is_bounded(&sq).unwrap());
    let strip = le_problem(vec![0.0, 0.0], &[vec![1.0, 0.0], vec![-1.0, 0.0]], &[1.0, 0.0]);
    assert!(!is_bounded(&strip).unwrap());
}

/// Best objective over all basic feasible solutions, by enumerating every
/// `n`-subset of constraints as an active set.
fn brute_force_max(c: &[f64], g: &[Vec<f64>], rhs: &[f64]) -> Option<f64> {
    let n = c.len();
    let m = g.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let mat = nalgebra::DMatrix::from_fn(n, n, |r, col| g[idx[r]][col]);
        let b = nalgebra::DVector::from_fn(n, |r, _| rhs[idx[r]]);
        if mat.determinant().abs() > 1e-9 {
            if let Some(z) = mat.lu().solve(&b) {
                let feasible = (0..m).all(|i| dot(&g[i], z.as_slice()) <= rhs[i] + 1e-9);
                if feasible {
                    let v = dot(c, z.as_slice());
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
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

fn bounded_lp() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    (3usize..=5).prop_flat_map(|n| {
        let rows = 3usize..=8;
        (
            prop::collection::vec(-5.0f64..5.0, n),
            rows.prop_flat_map(move |m| {
                (prop::collection::vec(prop::collection::vec(-3i32..=3, n), m), prop::collection::vec(-2.0f64..6.0, m))
            }),
        )
            .prop_map(move |(c, (g, rhs))| {
                let mut g: Vec<Vec<f64>> = g.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                let mut rhs = rhs;
                // box keeps every instance bounded
                for j in 0..n {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    g.push(e.clone());
                    rhs.push(4.0);
                    e[j] = -1.0;
                    g.push(e);
                    rhs.push(4.0);
                }
                (c, g, rhs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_vertex_enumeration((c, g, rhs) in bounded_lp()) {
        let p = le_problem(c.clone(), &g, &rhs);
        let s = solve(&p, None).unwrap();
        match brute_force_max(&c, &g, &rhs) {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective_value - best).abs() <= 1e-8 * (1.0 + best.abs()), "{} vs {}", s.objective_value, best);
                prop_assert!(p.max_violation(&s.z) <= TAU_FEAS);
            }
        }
    }

    #[test]
    fn warm_and_cold_agree((c, g, rhs) in bounded_lp(), c2 in prop::collection::vec(-5.0f64..5.0, 5)) {
        let p = le_problem(c.clone(), &g, &rhs);
        let first = solve(&p, None).unwrap();
        let mut q = p.clone();
        q.objective = c2[..c.len()].to_vec();
        let warm = solve(&q, first.basis.as_ref()).unwrap();
        let cold = solve(&q, None).unwrap();
        prop_assert_eq!(warm.status, cold.status);
        if cold.status == LpStatus::Optimal {
            prop_assert!((warm.objective_value - cold.objective_value).abs() <= 1e-8 * (1.0 + cold.objective_value.abs()));
        }
    }

    #[test]
    fn redundancy_removal_preserves_set(
        (c, g, rhs) in bounded_lp(),
        samples in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 5), 1000),
    ) {
        let n = c.len();
        let p = le_problem(c, &g, &rhs);
        let Some(keep) = remove_redundant_rows(&p).unwrap() else { return Ok(()); };
        let inside = |z: &[f64], all: bool| {
            (0..g.len()).filter(|&i| all || keep[i]).all(|i| dot(&g[i], z) <= rhs[i] + 1e-7)
        };
        for s in &samples {
            let z = &s[..n];
            prop_assert_eq!(inside(z, true), inside(z, false), "sample {:?}", z);
        }
    }
}
