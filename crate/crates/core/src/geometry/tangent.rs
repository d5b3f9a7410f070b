//! Tangent and horizontal projections at a pre-shape, and orthonormal bases
//! of the horizontal subspace.

use nalgebra::DMatrix;

use super::geodesic::SpaceMode;
use super::preshape::{HorizontalVector, PreShape};
use crate::error::{Error, Result};
use crate::linalg;

/// Rank guard for the horizontal projection: the second-smallest eigenvalue
/// of X X^T must stay above this.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Project an arbitrary m x (k-1) matrix onto the tangent space of the
/// pre-shape sphere at `x`: subtract the radial component.
pub fn project_tangent(x: &PreShape, w: &DMatrix<f64>) -> DMatrix<f64> {
    project_tangent_raw(x.matrix(), w)
}

pub(crate) fn project_tangent_raw(x: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    w - x * w.dot(x)
}

/// The orthonormal basis `{(E_ij - E_ji)/sqrt(2) : i < j}` of m x m
/// skew-symmetric matrices.
pub fn skew_basis(m: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(m * (m - 1) / 2);
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut a = DMatrix::zeros(m, m);
            a[(i, j)] = inv_sqrt2;
            a[(j, i)] = -inv_sqrt2;
            basis.push(a);
        }
    }
    basis
}

/// Orthogonal projection of a tangent matrix onto the horizontal subspace at
/// `x`, removing the component in the vertical space spanned by the matrices
/// `A x` with `A` skew-symmetric.
///
/// Errors with `RankDeficient` when the second-smallest eigenvalue of
/// `X X^T` is below 1e-10, where the vertical space degenerates.
pub fn project_horizontal(x: &PreShape, vt: &DMatrix<f64>) -> Result<HorizontalVector> {
    let projected = project_horizontal_raw(x.matrix(), vt, SpaceMode::Shape)?;
    Ok(HorizontalVector::new_unchecked(x.clone(), projected))
}

pub(crate) fn project_horizontal_raw(
    x: &DMatrix<f64>,
    vt: &DMatrix<f64>,
    mode: SpaceMode,
) -> Result<DMatrix<f64>> {
    let m = x.nrows();
    if m == 1 {
        // SO(1) is trivial: no vertical space.
        return Ok(vt.clone());
    }
    let gram = x * x.transpose();
    let eig = linalg::sorted_symmetric_eigen(&gram);
    if eig.second_smallest() < RANK_TOL {
        return Err(Error::RankDeficient {
            context: format!(
                "lambda_{} of X X^T is {:.3e} (< 1e-10)",
                m - 1,
                eig.second_smallest()
            ),
        });
    }
    let _ = mode; // the projection formula is identical in both modes
    linalg::horizontal_part_given_eigen(&eig, x, vt, 0.0).ok_or(Error::RankDeficient {
        context: "vertical-component solve is singular".into(),
    })
}

/// Rotation bringing `x` into its principal-axis frame: the rows are the
/// eigenvectors of `x x^T` in descending eigenvalue order, with signs fixed
/// so that each row of `Q x` has a positive leading entry. Equivariant under
/// common rotations of `x` (away from ties in the Gram spectrum), which
/// makes constructions rooted in this frame rotation-invariant.
pub fn canonical_rotation(x: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = linalg::sorted_symmetric_eigen(&(x * x.transpose()));
    let mut q = eig.vectors.transpose();
    let y = &q * x;
    for j in 0..q.nrows() {
        if let Some(v) = y.row(j).iter().find(|v| v.abs() > 1e-9) {
            if *v < 0.0 {
                for c in 0..q.ncols() {
                    q[(j, c)] = -q[(j, c)];
                }
            }
        }
    }
    q
}

/// Deterministic orthonormal basis (columns, length m(k-1)) of the horizontal
/// subspace at `x`: the projected ambient coordinate basis is orthonormalized
/// by sequential Gram-Schmidt in the principal-axis frame of `x` and rotated
/// back. The fixed sweep order keeps the construction stable against rounding
/// (unlike an eigenbasis of the projector, whose spectrum is fully
/// degenerate), so per-dimension residual variances taken in this basis are
/// invariant under common rotations of the data.
pub fn horizontal_basis(x: &DMatrix<f64>, mode: SpaceMode) -> Result<DMatrix<f64>> {
    let (m, km1) = x.shape();
    let d = m * km1;
    let q = canonical_rotation(x);
    let x_c = &q * x;

    let expected = horizontal_dim(m, km1 + 1, mode);
    let mut accepted: Vec<DMatrix<f64>> = Vec::with_capacity(expected);
    for col in 0..d {
        let mut e = DMatrix::zeros(m, km1);
        e[col] = 1.0; // column-major linear index
        let t = match mode {
            SpaceMode::Shape => project_tangent_raw(&x_c, &e),
            SpaceMode::SizeAndShape => e,
        };
        let mut h = project_horizontal_raw(&x_c, &t, mode)?;
        // two orthogonalization passes keep the basis orthonormal to rounding
        for _ in 0..2 {
            for b in &accepted {
                let coef = h.dot(b);
                h -= b * coef;
            }
        }
        let norm = h.norm();
        if norm > 1e-6 {
            accepted.push(h / norm);
        }
        if accepted.len() == expected {
            break;
        }
    }
    if accepted.len() != expected {
        return Err(Error::RankDeficient {
            context: format!(
                "horizontal subspace rank {} differs from expected {}",
                accepted.len(),
                expected
            ),
        });
    }
    // rotate the basis matrices back from the canonical frame
    let qt = q.transpose();
    let mut basis = DMatrix::zeros(d, expected);
    for (dst, b_c) in accepted.iter().enumerate() {
        let b = &qt * b_c;
        for (i, v) in b.iter().enumerate() {
            basis[(i, dst)] = *v;
        }
    }
    Ok(basis)
}

/// Dimension of the horizontal subspace: m(k-1) - 1 - m(m-1)/2 for shapes,
/// m(k-1) - m(m-1)/2 when scale is retained.
pub fn horizontal_dim(m: usize, k: usize, mode: SpaceMode) -> usize {
    let ambient = m * (k - 1);
    let vertical = m * (m - 1) / 2;
    match mode {
        SpaceMode::Shape => ambient - 1 - vertical,
        SpaceMode::SizeAndShape => ambient - vertical,
    }
}
