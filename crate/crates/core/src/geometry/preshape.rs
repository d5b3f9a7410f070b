//! Point and tangent-vector types for the pre-shape sphere.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) const UNIT_NORM_TOL: f64 = 1e-12;
pub(crate) const HORIZONTAL_TOL: f64 = 1e-10;

/// A centered, unit-norm m x (k-1) matrix: a point on the pre-shape sphere.
///
/// Rows correspond to spatial axes, columns to Helmertized landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct PreShape {
    matrix: DMatrix<f64>,
}

impl PreShape {
    /// Validates the unit Frobenius norm to within 1e-12.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let norm = matrix.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::invalid(
                "pre-shape",
                format!("Frobenius norm {norm} deviates from 1 by more than 1e-12"),
            ));
        }
        Ok(PreShape { matrix })
    }

    /// Rescale an arbitrary nonzero matrix onto the sphere.
    pub fn from_unnormalized(matrix: DMatrix<f64>) -> Result<Self> {
        let norm = matrix.norm();
        if norm < 1e-300 {
            return Err(Error::DegenerateConfiguration { size: norm });
        }
        Ok(PreShape {
            matrix: matrix / norm,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Spatial dimension m.
    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of landmarks k of the underlying configuration.
    pub fn k(&self) -> usize {
        self.matrix.ncols() + 1
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m(), self.k())
    }
}

/// An m x (k-1) matrix with translation removed but scale retained.
#[derive(Debug, Clone, PartialEq)]
pub struct PreSizeShape {
    matrix: DMatrix<f64>,
}

impl PreSizeShape {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.norm() < 1e-300 {
            return Err(Error::DegenerateConfiguration { size: 0.0 });
        }
        Ok(PreSizeShape { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Centroid size of the underlying configuration.
    pub fn size(&self) -> f64 {
        self.matrix.norm()
    }
}

/// A horizontal tangent vector at a pre-shape `x`: trace-orthogonal to `x`
/// and with `x v^T` symmetric. Horizontal vectors model tangent vectors to
/// shape space isometrically.
#[derive(Debug, Clone)]
pub struct HorizontalVector {
    matrix: DMatrix<f64>,
    base: PreShape,
}

impl HorizontalVector {
    /// Validates both horizontality conditions to within 1e-10.
    pub fn new(base: PreShape, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.shape() != base.matrix().shape() {
            return Err(Error::invalid(
                "horizontal vector",
                "dimension mismatch with the base pre-shape",
            ));
        }
        let trace = matrix.dot(base.matrix());
        if trace.abs() > HORIZONTAL_TOL {
            return Err(Error::invalid(
                "horizontal vector",
                format!("tr(X V^T) = {trace:.3e} exceeds 1e-10"),
            ));
        }
        let prod = base.matrix() * matrix.transpose();
        let asym = (&prod - prod.transpose()).norm();
        if asym > HORIZONTAL_TOL {
            return Err(Error::invalid(
                "horizontal vector",
                format!("X V^T asymmetry {asym:.3e} exceeds 1e-10"),
            ));
        }
        Ok(HorizontalVector { matrix, base })
    }

    pub(crate) fn new_unchecked(base: PreShape, matrix: DMatrix<f64>) -> Self {
        HorizontalVector { matrix, base }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn base(&self) -> &PreShape {
        &self.base
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }
}
