//! Euclidean distance from a point to an H-polytope by a primal active-set
//! method on `min ½‖x − p‖²  s.t.  N·x ≤ o`.

use nalgebra::{DMatrix, DVector};

use crate::geometry::linalg::{dist, dot};
use crate::geometry::Facet;

const MAX_ITER: usize = 10_000;

/// Distance from `p` to `{x : f.normal·x ≤ f.offset ∀ f}`, starting from the
/// feasible point `start`.
pub(crate) fn distance_to_polytope(facets: &[Facet], start: &[f64], p: &[f64]) -> f64 {
    let tol = 1e-12 * (1.0 + p.iter().chain(start).fold(0.0f64, |m, v| m.max(v.abs())));
    if facets.iter().all(|f| dot(&f.normal, p) - f.offset <= tol) {
        return 0.0;
    }
    let d = p.len();
    let mut x = start.to_vec();
    let mut work: Vec<usize> = Vec::new();
    for _ in 0..MAX_ITER {
        let g = DVector::from_iterator(d, x.iter().zip(p).map(|(a, b)| a - b));
        // step to the minimizer on the current working face
        let (step, mult) = if work.is_empty() {
            (-g.clone(), DVector::zeros(0))
        } else {
            let nw = DMatrix::from_fn(work.len(), d, |r, c| facets[work[r]].normal[c]);
            let gram = &nw * nw.transpose();
            let rhs = -(&nw * &g);
            let mu = gram.clone().lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(work.len()));
            let step = -(&g + nw.transpose() * &mu);
            (step, mu)
        };
        let step_norm = step.norm();
        if step_norm <= 1e-13 * (1.0 + g.norm()) {
            // stationary on the face: check multipliers
            let worst = mult.iter().enumerate().fold((None, -1e-12), |acc, (i, &m)| if m < acc.1 { (Some(i), m) } else { acc });
            match worst.0 {
                Some(i) => {
                    work.remove(i);
                    continue;
                }
                None => return dist(&x, p),
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (i, f) in facets.iter().enumerate() {
            if work.contains(&i) {
                continue;
            }
            let rate: f64 = f.normal.iter().zip(step.iter()).map(|(a, b)| a * b).sum();
            if rate <= 1e-15 {
                continue;
            }
            let slack = (f.offset - dot(&f.normal, &x)).max(0.0);
            let t = slack / rate;
            if t < alpha {
                alpha = t;
                blocking = Some(i);
            }
        }
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi += alpha * s;
        }
        if let Some(i) = blocking {
            work.push(i);
        }
    }
    log::warn!("distance-to-polytope active set did not settle; returning last iterate");
    dist(&x, p)
}
