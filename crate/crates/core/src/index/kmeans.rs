use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::scalar::{squared_l2, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans<T> {
    pub centroids: Matrix<T>,
    /// Centroid index of every input point.
    pub assignment: Vec<usize>,
    pub iterations_run: usize,
}

/// Index of the closest centroid; ties go to the lowest index.
pub(crate) fn nearest<T: Scalar>(centroids: &Matrix<T>, point: &[T]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = squared_l2(row, point);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn seed_plus_plus<T: Scalar>(points: &[&[T]], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_l2(p, points[chosen[0]]).as_f64())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            if d2[pick] == 0.0 {
                d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick)
            } else {
                pick
            }
        } else {
            // duplicates only: take the first point not yet chosen
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = squared_l2(p, points[next]).as_f64();
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

/// Lloyd's algorithm with k-means++ seeding. `k` is clamped to `1..=points.len()`;
/// empty clusters keep their previous centroid. Stops early once assignments settle.
pub fn kmeans<T: Scalar>(points: &[&[T]], k: usize, iterations: usize, seed: u64) -> KMeans<T> {
    assert!(!points.is_empty(), "k-means needs at least one point");
    let dim = points[0].len();
    let k = k.clamp(1, points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = seed_plus_plus(points, k, &mut rng);
    let mut centroids = Matrix::zeros(k, dim);
    for (c, &p) in seeds.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(points[p]);
    }
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
    let mut iterations_run = 0;
    for _ in 0..iterations {
        iterations_run += 1;
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p.iter()) {
                *s += x.as_f64();
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = T::of(s * inv);
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    KMeans {
        centroids,
        assignment,
        iterations_run,
    }
}
