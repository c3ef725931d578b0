//! Small dense helpers for hull construction and affine subspaces.

use nalgebra::DMatrix;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Unit normal of the hyperplane through `points` (exactly `dim` of them),
/// or `None` if they are affinely dependent.
pub(crate) fn hyperplane_normal(points: &[&[f64]]) -> Option<Vec<f64>> {
    let d = points[0].len();
    debug_assert_eq!(points.len(), d);
    if d == 1 {
        return Some(vec![1.0]);
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (r, p) in points[1..].iter().enumerate() {
        for c in 0..d {
            m[(r, c)] = p[c] - points[0][c];
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let (imin, smin) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    // the padded zero row always contributes one zero singular value; the
    // second smallest must be clearly nonzero for a proper simplex
    let mut sorted: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.len() > 1 && sorted[1] <= 1e-13 * smax.max(1e-300) {
        return None;
    }
    let _ = smin;
    let n: Vec<f64> = (0..d).map(|c| v_t[(imin, c)]).collect();
    let len = norm(&n);
    Some(n.iter().map(|x| x / len).collect())
}

/// Greedy orthonormalization of `vectors`; returns the basis of their span,
/// skipping vectors whose residual is below `tol`.
pub(crate) fn orthonormal_span(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if let Some(u) = residual_unit(v, &basis, tol) {
            basis.push(u);
        }
    }
    basis
}

/// `v` minus its projection on the orthonormal `basis`, normalized, if the
/// residual norm exceeds `tol`. Two Gram-Schmidt passes.
pub(crate) fn residual_unit(v: &[f64], basis: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let len = norm(&r);
    (len > tol).then(|| r.iter().map(|x| x / len).collect())
}

/// Orthonormal basis of the complement of span(`basis`) in `R^dim`.
pub(crate) fn orthogonal_complement(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut all = basis.to_vec();
    let mut out = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        if let Some(u) = residual_unit(&e, &all, 1e-6) {
            all.push(u.clone());
            out.push(u);
        }
        if all.len() == dim {
            break;
        }
    }
    out
}

/// Affine hull of `points`: an origin point and an orthonormal basis of the
/// direction space. Directions with extent below `tol` are dropped.
pub(crate) fn affine_hull(points: &[Vec<f64>], tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let origin = points[0].clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // farthest-point greedy order keeps the basis well conditioned
    let mut remaining: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &origin)).collect();
    loop {
        let mut best = None;
        let mut best_len = tol;
        for (i, v) in remaining.iter().enumerate() {
            let mut r = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&r, b);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let len = norm(&r);
            if len > best_len {
                best_len = len;
                best = Some(i);
            }
        }
        match best {
            Some(i) => {
                let v = remaining.swap_remove(i);
                match residual_unit(&v, &basis, tol) {
                    Some(u) => basis.push(u),
                    None => break,
                }
            }
            None => break,
        }
        if basis.len() == origin.len() {
            break;
        }
    }
    (origin, basis)
}

/// Numerical rank of a set of unit-ish vectors.
pub(crate) fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    orthonormal_span(vectors, tol).len()
}
