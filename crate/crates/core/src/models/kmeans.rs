//! Lloyd's k-means with seeded initialization.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Result};
use crate::preprocess::FeatureMatrix;

const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Centroids of `k` clusters over the rows of `points`.
pub fn kmeans(points: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<&[f64]> = points.row_iter().collect();
    Ok(kmeans_rows(&rows, k, seed)?.centroids)
}

/// Initial centroids are `k` distinct rows drawn with a seeded RNG. Lloyd
/// iterations run until the assignment stops changing or the iteration cap
/// is hit. A cluster left empty is re-seeded with the point farthest from
/// its current centroid.
pub fn kmeans_rows(rows: &[&[f64]], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(ModelError::KMeans("k must be positive".into()));
    }
    if k > rows.len() {
        return Err(ModelError::KMeans(format!(
            "k = {k} exceeds the {} points",
            rows.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, rows.len(), k).into_vec();
    picks.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = picks.iter().map(|&i| rows[i].to_vec()).collect();
    let dim = rows[0].len();

    let mut assignments = vec![usize::MAX; rows.len()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        let mut dists = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let (c, d) = nearest(row, &centroids);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
            dists.push(d);
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in rows.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row.iter()) {
                *s += v;
            }
        }
        let mut taken = vec![false; rows.len()];
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..rows.len())
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k <= rows");
                taken[far] = true;
                centroids[c] = rows[far].to_vec();
                // force a reassignment pass
                assignments[far] = usize::MAX;
            } else {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(KMeans {
        centroids,
        assignments,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn recovers_blob_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rows = Vec::new();
        for center in [[0.0, 0.0], [10.0, 10.0]] {
            for _ in 0..30 {
                rows.push(vec![
                    center[0] + rng.random_range(-0.5..0.5),
                    center[1] + rng.random_range(-0.5..0.5),
                ]);
            }
        }
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let km = kmeans_rows(&refs, 2, 3).unwrap();
        let blob_mean = |r: std::ops::Range<usize>| -> Vec<f64> {
            (0..2)
                .map(|d| rows[r.clone()].iter().map(|p| p[d]).sum::<f64>() / r.len() as f64)
                .collect()
        };
        let mut expected = vec![blob_mean(0..30), blob_mean(30..60)];
        let mut got = km.centroids.clone();
        expected.sort_by(|a, b| a[0].total_cmp(&b[0]));
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (e, g) in expected.iter().zip(&got) {
            assert!(sq_dist(e, g).sqrt() < 1e-6);
        }
    }

    #[test]
    fn k_equal_rows_returns_points() {
        let rows = [vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut got = kmeans_rows(&refs, 3, 9).unwrap().centroids;
        let mut want = rows.to_vec();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        want.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, want);
    }

    #[test]
    fn seeded_and_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random()]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        assert_eq!(kmeans_rows(&refs, 4, 7).unwrap(), kmeans_rows(&refs, 4, 7).unwrap());
        assert!(kmeans_rows(&refs, 0, 7).is_err());
        assert!(kmeans_rows(&refs, 51, 7).is_err());
    }

    #[test]
    fn duplicate_points_do_not_leave_nan() {
        let rows = vec![vec![1.0], vec![1.0], vec![1.0], vec![5.0]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let km = kmeans_rows(&refs, 3, 0).unwrap();
        assert!(km.centroids.iter().flatten().all(|v| v.is_finite()));
    }
}
