//! Seeded k-means (k-means++ init, Lloyd iterations). Shared by the EM
//! initializer and the piecewise-linear fitter; not part of the public API.

use nalgebra::DVector;
use rand::Rng;

pub(crate) fn assign_labels(points: &[DVector<f64>], centers: &[DVector<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, c) in centers.iter().enumerate() {
                let d = (p - c).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Returns (centers, labels). `k <= points.len()` is required.
pub(crate) fn kmeans<R: Rng>(
    points: &[DVector<f64>],
    k: usize,
    rng: &mut R,
    iters: usize,
) -> (Vec<DVector<f64>>, Vec<usize>) {
    assert!(k >= 1 && k <= points.len());
    // k-means++ seeding.
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())].clone());
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| (p - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, d) in dist2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            dist2[i] = dist2[i].min((p - &centers[centers.len() - 1]).norm_squared());
        }
    }

    let mut labels = assign_labels(points, &centers);
    for _ in 0..iters {
        let dim = points[0].len();
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            } else {
                centers[c] = points[rng.gen_range(0..points.len())].clone();
            }
        }
        let new_labels = assign_labels(points, &centers);
        let stable = new_labels == labels;
        labels = new_labels;
        if stable {
            break;
        }
    }
    (centers, labels)
}
