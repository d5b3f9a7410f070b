//! Landmark configurations and the Helmert reduction to pre-shapes.

use nalgebra::DMatrix;

use super::preshape::{PreShape, PreSizeShape};
use crate::error::{Error, Result};

/// A configuration of `k` labelled landmarks in `R^m`, observed at a time.
///
/// Rows are landmarks, columns are spatial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    landmarks: DMatrix<f64>,
    time: f64,
}

impl Configuration {
    /// Requires `k > m >= 1` and finite entries.
    pub fn new(landmarks: DMatrix<f64>, time: f64) -> Result<Self> {
        let (k, m) = (landmarks.nrows(), landmarks.ncols());
        if m < 1 || k <= m {
            return Err(Error::invalid(
                "configuration",
                format!("need k > m >= 1 landmarks, got k = {k}, m = {m}"),
            ));
        }
        if landmarks.iter().any(|v| !v.is_finite()) || !time.is_finite() {
            return Err(Error::invalid(
                "configuration",
                "landmark coordinates and time must be finite",
            ));
        }
        Ok(Configuration { landmarks, time })
    }

    pub fn landmarks(&self) -> &DMatrix<f64> {
        &self.landmarks
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of landmarks.
    pub fn k(&self) -> usize {
        self.landmarks.nrows()
    }

    /// Spatial dimension.
    pub fn m(&self) -> usize {
        self.landmarks.ncols()
    }
}

/// The (k-1) x k Helmert sub-matrix. Row j has j entries equal to
/// `-1/sqrt(j(j+1))` followed by `j/sqrt(j(j+1))` and zeros; its rows form an
/// orthonormal basis of the subspace orthogonal to the vector of ones.
pub fn helmert_submatrix(k: usize) -> DMatrix<f64> {
    assert!(k >= 2, "helmert sub-matrix needs k >= 2");
    let mut h = DMatrix::zeros(k - 1, k);
    for j in 1..k {
        let hj = -1.0 / ((j as f64) * (j as f64 + 1.0)).sqrt();
        for col in 0..j {
            h[(j - 1, col)] = hj;
        }
        h[(j - 1, j)] = -(j as f64) * hj;
    }
    h
}

/// Centroid size: the Frobenius norm of the centered landmark matrix.
pub fn centroid_size(c: &Configuration) -> f64 {
    let h = helmert_submatrix(c.k());
    (h * c.landmarks()).norm()
}

/// Remove translation and scale, producing the m x (k-1) pre-shape matrix.
pub fn to_preshape(c: &Configuration) -> Result<PreShape> {
    let h = helmert_submatrix(c.k());
    let reduced = (h * c.landmarks()).transpose();
    let size = reduced.norm();
    if size < 1e-300 {
        return Err(Error::DegenerateConfiguration { size });
    }
    PreShape::from_unnormalized(reduced)
}

/// Remove translation only, producing the m x (k-1) pre-size-and-shape matrix.
pub fn to_pre_size_shape(c: &Configuration) -> Result<PreSizeShape> {
    let h = helmert_submatrix(c.k());
    let reduced = (h * c.landmarks()).transpose();
    PreSizeShape::new(reduced)
}

/// Reconstruct centered landmarks (k x m) from an m x (k-1) reduced matrix.
/// For a pre-shape this yields the unit-centroid-size representative.
pub fn landmarks_from_reduced(reduced: &DMatrix<f64>) -> DMatrix<f64> {
    let k = reduced.ncols() + 1;
    let h = helmert_submatrix(k);
    h.transpose() * reduced.transpose()
}
