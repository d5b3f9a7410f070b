//! Principal component analysis of tangent-space coordinates, and the
//! Procrustes mean used to root the tangent space for raw shape data.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{align_raw, log_raw, PreShape, SpaceMode};

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Component scores, one row per observation.
    pub scores: DMatrix<f64>,
    /// Variance fraction of every available component (not just the scored
    /// ones); non-negative, summing to at most one.
    pub proportions: Vec<f64>,
    /// Foot point of the tangent space the vectors live in: the Procrustes
    /// mean for mean-rooted PCA, the path start for unrolled data.
    pub mean_shape: DMatrix<f64>,
}

/// Centered SVD-based PCA of tangent vectors (all at the same foot point).
/// Scores are `U * Sigma` truncated to `q` components; the sign convention
/// makes the first non-negligible loading of each component positive.
pub fn tangent_pca(vectors: &[DMatrix<f64>], base: &DMatrix<f64>, q: usize) -> Result<PcaResult> {
    if vectors.len() < 2 {
        return Err(Error::TooFewPoints {
            got: vectors.len(),
            need: 2,
        });
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::invalid("pca", "inconsistent vector dimensions"));
    }
    let n = vectors.len();
    let mut x = DMatrix::zeros(n, d);
    for (i, v) in vectors.iter().enumerate() {
        for (j, val) in v.iter().enumerate() {
            x[(i, j)] = *val;
        }
    }
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }
    let svd = x.clone().svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut vt = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let r = s.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite"));

    let total: f64 = s.iter().map(|v| v * v).sum();
    let proportions: Vec<f64> = order
        .iter()
        .map(|&i| {
            if total > 0.0 {
                s[i] * s[i] / total
            } else {
                0.0
            }
        })
        .collect();

    // sign convention: first loading entry larger than 1e-9 is positive
    for c in 0..r {
        let row = vt.row(c);
        if let Some(first) = row.iter().find(|v| v.abs() > 1e-9) {
            if *first < 0.0 {
                for j in 0..vt.ncols() {
                    vt[(c, j)] = -vt[(c, j)];
                }
                for i in 0..u.nrows() {
                    u[(i, c)] = -u[(i, c)];
                }
            }
        }
    }

    let q_eff = q.min(r);
    let mut scores = DMatrix::zeros(n, q_eff);
    for (dst, &src) in order.iter().take(q_eff).enumerate() {
        for i in 0..n {
            scores[(i, dst)] = u[(i, src)] * s[src];
        }
    }
    Ok(PcaResult {
        scores,
        proportions,
        mean_shape: base.clone(),
    })
}

/// Iterative Procrustes mean on the pre-shape sphere: align all shapes onto
/// the current mean, average, rescale to unit norm, repeat.
pub fn procrustes_mean(shapes: &[PreShape], max_iterations: usize, tol: f64) -> Result<PreShape> {
    if shapes.len() < 2 {
        return Err(Error::TooFewPoints {
            got: shapes.len(),
            need: 2,
        });
    }
    let mut mean = shapes[0].matrix().clone();
    for _ in 0..max_iterations {
        let mut acc = DMatrix::zeros(mean.nrows(), mean.ncols());
        for x in shapes {
            let (aligned, _, _) = align_raw(&mean, x.matrix());
            acc += aligned;
        }
        acc /= shapes.len() as f64;
        let norm = acc.norm();
        if norm < 1e-300 {
            return Err(Error::DegenerateConfiguration { size: norm });
        }
        acc /= norm;
        let shift = (&acc - &mean).norm();
        mean = acc;
        if shift < tol {
            break;
        }
    }
    PreShape::from_unnormalized(mean)
}

/// Inverse-exponential coordinates of shapes in the tangent space at `mean`.
pub fn procrustes_tangent_coordinates(
    shapes: &[PreShape],
    mean: &PreShape,
) -> Result<Vec<DMatrix<f64>>> {
    shapes
        .iter()
        .map(|x| log_raw(SpaceMode::Shape, mean.matrix(), x.matrix()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_map, shape_distance, HorizontalVector};
    use crate::sim::{random_preshape, random_unit_horizontal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planar_data_has_two_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(120);
        let base = DMatrix::zeros(2, 3);
        let e1 = DMatrix::from_fn(2, 3, |_, _| rng.gen::<f64>() - 0.5).normalize();
        let mut e2 = DMatrix::from_fn(2, 3, |_, _| rng.gen::<f64>() - 0.5);
        e2 -= &e1 * e1.dot(&e2);
        let e2 = e2.normalize();
        let vectors: Vec<DMatrix<f64>> = (0..12)
            .map(|_| &e1 * (rng.gen::<f64>() * 2.0) + &e2 * (rng.gen::<f64>() - 0.5))
            .collect();
        let pca = tangent_pca(&vectors, &base, 3).unwrap();
        let first_two: f64 = pca.proportions.iter().take(2).sum();
        assert!((first_two - 1.0).abs() < 1e-10);
        assert!(pca.proportions.iter().all(|&p| p >= 0.0));
        assert!(pca.proportions.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn full_rank_scores_reproduce_pairwise_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(121);
        let base = DMatrix::zeros(2, 4);
        let vectors: Vec<DMatrix<f64>> = (0..6)
            .map(|_| DMatrix::from_fn(2, 4, |_, _| rng.gen::<f64>() - 0.5))
            .collect();
        let pca = tangent_pca(&vectors, &base, 8).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let direct = (&vectors[i] - &vectors[j]).norm();
                let via_scores = (pca.scores.row(i) - pca.scores.row(j)).norm();
                assert!((direct - via_scores).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sign_convention_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(122);
        let base = DMatrix::zeros(1, 4);
        let vectors: Vec<DMatrix<f64>> = (0..5)
            .map(|_| DMatrix::from_fn(1, 4, |_, _| rng.gen::<f64>() - 0.5))
            .collect();
        let a = tangent_pca(&vectors, &base, 2).unwrap();
        // negating the input order leaves the convention deterministic
        let b = tangent_pca(&vectors, &base, 2).unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn procrustes_mean_of_a_tight_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let center = random_preshape(&mut rng, 8, 3);
        let shapes: Vec<PreShape> = (0..10)
            .map(|_| {
                let dir = random_unit_horizontal(&mut rng, &center);
                let step = HorizontalVector::new_unchecked(center.clone(), dir.matrix() * 0.05);
                exp_map(&center, &step).unwrap()
            })
            .collect();
        let mean = procrustes_mean(&shapes, 50, 1e-12).unwrap();
        assert!(shape_distance(&mean, &center).unwrap() < 0.05);
        let coords = procrustes_tangent_coordinates(&shapes, &mean).unwrap();
        // coordinates are horizontal at the mean
        for v in &coords {
            assert!(v.dot(mean.matrix()).abs() < 1e-9);
        }
    }
}
