//! Polytope vertex enumeration by basis enumeration. Intended for the small
//! systems this crate produces: capability polygons (2-D, tens of rows) and
//! multi-period envelope polytopes (dimension = horizon length). Completely
//! independent of the simplex path, which makes it usable as a cross-check.

use crate::par;
use nalgebra::{DMatrix, DVector};

/// Vertices of `{p in R^2 : a_i . p <= b_i}`, sorted counter-clockwise around
/// the centroid. Returns an empty list for empty or unbounded-degenerate
/// inputs.
pub fn enumerate_vertices_2d(rows: &[([f64; 2], f64)]) -> Vec<[f64; 2]> {
    let n = rows.len();
    let scale = rows
        .iter()
        .fold(1.0f64, |s, (a, b)| s.max(a[0].abs()).max(a[1].abs()).max(b.abs()));
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (ai, bi) = rows[i];
            let (aj, bj) = rows[j];
            let det = ai[0] * aj[1] - ai[1] * aj[0];
            if det.abs() < 1e-12 * scale * scale {
                continue;
            }
            let px = (bi * aj[1] - bj * ai[1]) / det;
            let py = (ai[0] * bj - aj[0] * bi) / det;
            let feasible = rows
                .iter()
                .all(|(a, b)| a[0] * px + a[1] * py <= b + 1e-8 * (1.0 + b.abs()));
            if feasible {
                let dup = verts
                    .iter()
                    .any(|v| (v[0] - px).abs() < 1e-8 && (v[1] - py).abs() < 1e-8);
                if !dup {
                    verts.push([px, py]);
                }
            }
        }
    }
    sort_ccw(&mut verts);
    verts
}

fn sort_ccw(verts: &mut [[f64; 2]]) {
    if verts.len() < 3 {
        return;
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / n;
    verts.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.partial_cmp(&aq).unwrap()
    });
}

/// Shoelace area of a counter-clockwise vertex loop.
pub fn polygon_area(verts: &[[f64; 2]]) -> f64 {
    if verts.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..verts.len() {
        let p = verts[k];
        let q = verts[(k + 1) % verts.len()];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    acc.abs() / 2.0
}

/// Vertices of `{p in R^d : A p <= b}` by enumerating d-subsets of active
/// rows. Cost grows as C(rows, d); callers keep d small (envelope horizons).
pub fn enumerate_vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let (n_rows, d) = (a.nrows(), a.ncols());
    if n_rows < d || d == 0 {
        return Vec::new();
    }
    // Parallelize over the first row choice; each job enumerates the
    // remaining combinations sequentially.
    let chunks = par::map_indexed(n_rows - d + 1, |first| {
        let mut found: Vec<DVector<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).map(|k| first + k).collect();
        loop {
            if let Some(v) = try_vertex(a, b, &idx) {
                found.push(v);
            }
            if d == 1 {
                return found;
            }
            // Advance combination, keeping idx[0] == first.
            let mut k = d - 1;
            loop {
                idx[k] += 1;
                if idx[k] <= n_rows - (d - k) {
                    for l in (k + 1)..d {
                        idx[l] = idx[l - 1] + 1;
                    }
                    break;
                }
                if k == 1 {
                    return found;
                }
                k -= 1;
            }
        }
    });
    let mut verts: Vec<DVector<f64>> = Vec::new();
    for chunk in chunks {
        for v in chunk {
            let dup = verts.iter().any(|w| (w - &v).amax() < 1e-8);
            if !dup {
                verts.push(v);
            }
        }
    }
    verts
}

fn try_vertex(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> Option<DVector<f64>> {
    let d = idx.len();
    let mut sub = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for (k, &i) in idx.iter().enumerate() {
        sub.row_mut(k).copy_from(&a.row(i));
        rhs[k] = b[i];
    }
    let lu = sub.lu();
    if lu.determinant().abs() < 1e-10 {
        return None;
    }
    let p = lu.solve(&rhs)?;
    let residual = a * &p - b;
    let ok = residual
        .iter()
        .zip(b.iter())
        .all(|(&r, &bi)| r <= 1e-8 * (1.0 + bi.abs()));
    if ok {
        Some(p)
    } else {
        None
    }
}
