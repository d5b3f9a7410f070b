//! Small dense linear-algebra helpers shared by the geometry and transport layers.
//!
//! Everything here operates on the m x m Gram matrices of points in the
//! pre-shape representation, with m typically 2 or 3.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order
/// and eigenvector columns permuted to match.
pub(crate) struct SortedSymmetricEigen {
    /// Eigenvalues, descending.
    pub values: DVector<f64>,
    /// Orthogonal matrix whose columns are the corresponding eigenvectors.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn sorted_symmetric_eigen(s: &DMatrix<f64>) -> SortedSymmetricEigen {
    let eig = nalgebra::SymmetricEigen::new(s.clone());
    let m = s.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let mut values = DVector::zeros(m);
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SortedSymmetricEigen { values, vectors }
}

impl SortedSymmetricEigen {
    /// Sum of the two smallest eigenvalues; the solvability guard for the
    /// skew-symmetric Sylvester equation. For m = 1 there is no equation to
    /// solve, so the guard never fails.
    pub fn smallest_pair_sum(&self) -> f64 {
        let m = self.values.len();
        if m < 2 {
            f64::INFINITY
        } else {
            self.values[m - 2] + self.values[m - 1]
        }
    }

    /// Second-smallest eigenvalue (lambda_{m-1} with descending ordering).
    pub fn second_smallest(&self) -> f64 {
        let m = self.values.len();
        if m < 2 {
            self.values[0]
        } else {
            self.values[m - 2]
        }
    }
}

/// Solve `A S + S A = B` for the unique skew-symmetric `A`, given the
/// eigendecomposition of the symmetric PSD matrix `S` and a skew-symmetric
/// right-hand side `B`. In the eigenbasis the solution is elementwise:
/// `a_ij = b_ij / (lambda_i + lambda_j)`.
///
/// Returns `None` when `lambda_{m-1} + lambda_m <= tol` (the equation is
/// singular on the corresponding 2-plane).
pub(crate) fn solve_skew_given_eigen(
    eig: &SortedSymmetricEigen,
    b: &DMatrix<f64>,
    tol: f64,
) -> Option<DMatrix<f64>> {
    let m = b.nrows();
    if m <= 1 {
        return Some(DMatrix::zeros(m, m));
    }
    if eig.smallest_pair_sum() <= tol {
        return None;
    }
    let bt = eig.vectors.transpose() * b * &eig.vectors;
    let mut at = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let val = bt[(i, j)] / (eig.values[i] + eig.values[j]);
            at[(i, j)] = val;
            at[(j, i)] = -val;
        }
    }
    Some(&eig.vectors * at * eig.vectors.transpose())
}

/// Orthogonal projection of a tangent matrix onto the horizontal subspace at
/// a point `x`, given the eigendecomposition of `x x^T`.
///
/// The vertical space is `{A x : A skew}`; the horizontal component is
/// `v - A x` where `A` solves `A S + S A = v x^T - x v^T` with `S = x x^T`.
/// This removes the vertical component exactly, unlike subtracting
/// projections onto the (generally non-orthogonal) vectors `A_ij x`.
pub(crate) fn horizontal_part_given_eigen(
    eig: &SortedSymmetricEigen,
    x: &DMatrix<f64>,
    v: &DMatrix<f64>,
    tol: f64,
) -> Option<DMatrix<f64>> {
    let b = v * x.transpose() - x * v.transpose();
    let a = solve_skew_given_eigen(eig, &b, tol)?;
    Some(v - a * x)
}
