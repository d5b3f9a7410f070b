//! Ordinary Procrustes rotation alignment and the induced shape distances.

use nalgebra::{DMatrix, DVector};

use super::preshape::{PreShape, PreSizeShape};
use crate::error::{Error, Result};

/// Tolerance below which the optimal rotation is flagged as non-unique.
const AMBIGUITY_TOL: f64 = 1e-9;

/// Result of rotating one pre-shape onto another.
#[derive(Debug, Clone)]
pub struct ProcrustesFit {
    /// The rotated second pre-shape, optimally fitted onto the first.
    pub fitted: PreShape,
    /// The rotation in SO(m) applied on the left.
    pub rotation: DMatrix<f64>,
    /// True when the optimal rotation is not unique (tied or vanishing
    /// singular values within 1e-9).
    pub ambiguous: bool,
}

/// Size-and-shape analogue of [`ProcrustesFit`].
#[derive(Debug, Clone)]
pub struct SizeShapeFit {
    pub fitted: PreSizeShape,
    pub rotation: DMatrix<f64>,
    pub ambiguous: bool,
}

/// SVD with singular values sorted in descending order.
fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let n = s.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));
    let mut us = DMatrix::zeros(u.nrows(), n);
    let mut ss = DVector::zeros(n);
    let mut vts = DMatrix::zeros(n, vt.ncols());
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        ss[dst] = s[src];
        vts.set_row(dst, &vt.row(src));
    }
    (us, ss, vts)
}

/// Rotate `b` onto `a` over SO(m): returns (R b, R, ambiguity flag).
///
/// The product `a (R b)^T` is symmetric with eigenvalues descending, all
/// non-negative except possibly the smallest, whose sign equals
/// `sign(det(a b^T))`.
pub(crate) fn align_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, bool) {
    let m = a.nrows();
    let cross = a * b.transpose();
    let (u, s, vt) = svd_sorted(&cross);
    let det_sign = u.determinant() * vt.determinant();
    let mut d = DMatrix::identity(m, m);
    if det_sign < 0.0 {
        d[(m - 1, m - 1)] = -1.0;
    }
    let rotation = &u * d * &vt;
    let fitted = &rotation * b;
    let ambiguous = if m >= 2 {
        s[m - 1].abs() < AMBIGUITY_TOL
            || (det_sign < 0.0 && (s[m - 2] - s[m - 1]).abs() < AMBIGUITY_TOL)
    } else {
        s[0].abs() < AMBIGUITY_TOL
    };
    (fitted, rotation, ambiguous)
}

fn check_dims(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(
            "procrustes",
            format!("dimension mismatch: {:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

/// Optimal rotation of `x2` onto `x1`.
pub fn procrustes_fit(x1: &PreShape, x2: &PreShape) -> Result<ProcrustesFit> {
    check_dims(x1.matrix(), x2.matrix())?;
    let (fitted, rotation, ambiguous) = align_raw(x1.matrix(), x2.matrix());
    Ok(ProcrustesFit {
        fitted: PreShape::from_unnormalized(fitted)?,
        rotation,
        ambiguous,
    })
}

/// Optimal rotation of `x2` onto `x1` in the size-and-shape setting.
pub fn ss_procrustes_fit(x1: &PreSizeShape, x2: &PreSizeShape) -> Result<SizeShapeFit> {
    check_dims(x1.matrix(), x2.matrix())?;
    let (fitted, rotation, ambiguous) = align_raw(x1.matrix(), x2.matrix());
    Ok(SizeShapeFit {
        fitted: PreSizeShape::new(fitted)?,
        rotation,
        ambiguous,
    })
}

pub(crate) fn shape_distance_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (fitted, _, _) = align_raw(a, b);
    a.dot(&fitted).clamp(-1.0, 1.0).acos()
}

/// Riemannian shape distance: arccos of the trace inner product after the
/// Procrustes fit. Lies in [0, pi/2] for m >= 2; for m = 1 (no rotation
/// group) this is the full sphere distance in [0, pi].
pub fn shape_distance(x1: &PreShape, x2: &PreShape) -> Result<f64> {
    check_dims(x1.matrix(), x2.matrix())?;
    Ok(shape_distance_raw(x1.matrix(), x2.matrix()))
}

pub(crate) fn size_shape_distance_raw(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (fitted, _, _) = align_raw(a, b);
    (fitted - a).norm()
}

/// Size-and-shape distance: the Euclidean distance after rotation alignment.
pub fn size_shape_distance(x1: &PreSizeShape, x2: &PreSizeShape) -> Result<f64> {
    check_dims(x1.matrix(), x2.matrix())?;
    Ok(size_shape_distance_raw(x1.matrix(), x2.matrix()))
}
