use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{named, ProbeReport, Relation};
use crate::error::{Error, Result};
use crate::numcore::{distance, norm2};
use crate::selector::{Dictionary, GradientTable};

pub const KMEANS_ITERATIONS: usize = 20;

/// Seeded k-means with k-means++ seeding; returns the centroids.
pub fn kmeans<V: AsRef<[f64]>>(points: &[V], k: usize, iterations: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "cluster count {k} must lie in 1..={}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].as_ref().to_vec()];
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| distance(p.as_ref(), c).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut idx = d2.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick].as_ref().to_vec());
    }

    let dim = points[0].as_ref().len();
    for _ in 0..iterations {
        let assign: Vec<usize> = points.iter().map(|p| nearest(p.as_ref(), &centers).0).collect();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(centers)
}

/// `(index, distance)` of the closest entry of `set`, lowest index on ties.
fn nearest<V: AsRef<[f64]>>(point: &[f64], set: &[V]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in set.iter().enumerate() {
        let d = distance(point, c.as_ref());
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Least-squares residual of the table's full gradient over the chosen medoids
/// against the summed distance of every candidate to its nearest medoid.
///
/// Valid when the full gradient is a sub-stochastic combination of the
/// candidate vectors, e.g. when every trajectory is a candidate.
pub fn cluster_bound_check(table: &GradientTable, cluster_count: usize, seed: u64) -> Result<ProbeReport> {
    if cluster_count == 0 || cluster_count > table.len() {
        return Err(Error::InvalidArgument(format!(
            "cluster count {cluster_count} must lie in 1..={}",
            table.len()
        )));
    }
    let centroids = kmeans(&table.gradients, cluster_count, KMEANS_ITERATIONS, seed)?;
    let mut medoids: Vec<usize> = centroids.iter().map(|c| nearest(c, &table.gradients).0).collect();
    medoids.sort_unstable();
    medoids.dedup();

    let dict = Dictionary::new(table);
    let weights = match dict.ridge(&medoids, 0.0) {
        Ok(w) => w,
        Err(Error::Singular { .. }) => {
            let max_diag = medoids.iter().map(|&i| dict.gram(i, i)).fold(0.0, f64::max);
            dict.ridge(&medoids, 1e-12 * max_diag.max(f64::MIN_POSITIVE))?
        }
        Err(e) => return Err(e),
    };
    let lhs = norm2(&dict.residual(&medoids, &weights));
    let medoid_vectors: Vec<&Vec<f64>> = medoids.iter().map(|&i| &table.gradients[i]).collect();
    let rhs: f64 = table.gradients.iter().map(|g| nearest(g, &medoid_vectors).1).sum();
    Ok(ProbeReport::new(
        "cluster_bound",
        format!("candidates={} cluster_count={cluster_count} seed={seed}", table.len()),
        named(&[("medoids", medoids.len() as f64), ("residual", lhs), ("spread", rhs)]),
        lhs,
        Relation::AtMost,
        rhs,
        1e-9,
    ))
}
