//! Information-criterion comparison of fitted models.
//!
//! Errors are modelled as independent Gaussians per tangent-space dimension
//! at the fit's base point: with per-dimension residual variances s_i^2 over
//! the M horizontal dimensions, `IC = n * sum_i log s_i^2 + K * p` where
//! `K = 2` (AIC) or `log n` (BIC) and `p = (mean_df + 1) * M` counts the
//! mean-model coefficients plus one variance per dimension.

use nalgebra::DMatrix;

use super::{unflatten_row, ShapeSplineFit};
use crate::error::{Error, Result};
use crate::geometry::{horizontal_basis, horizontal_dim};

/// Residual variances below this are reported as interpolation (IC of
/// negative infinity) instead of feeding `log`.
const ZERO_RESIDUAL_TOL: f64 = 1e-280;

#[derive(Debug, Clone, serde::Serialize)]
pub struct IcRow {
    pub model: String,
    /// Mean-model degrees of freedom per tangent dimension (2 for the
    /// geodesic, the knot count for linear splines, the effective degrees of
    /// freedom for the cubic).
    pub mean_df: f64,
    /// Dimension M of the horizontal (shape-space tangent) subspace.
    pub tangent_dim: usize,
    /// Total parameter count `(mean_df + 1) * M`.
    pub parameter_count: f64,
    pub sum_log_sigma2: f64,
    pub aic: f64,
    pub bic: f64,
    /// Set when some residual variance underflowed to zero.
    pub interpolating: bool,
}

/// Parameter count convention: mean-model coefficients plus one variance
/// parameter, per tangent dimension.
pub fn parameter_count(mean_df: f64, tangent_dim: usize) -> f64 {
    (mean_df + 1.0) * tangent_dim as f64
}

/// Build the comparison table for several fits of the same data.
pub fn information_criteria(fits: &[&ShapeSplineFit]) -> Result<Vec<IcRow>> {
    let first = fits
        .first()
        .ok_or_else(|| Error::invalid("ic", "no fits"))?;
    let n = first.data_times.len();
    for f in fits {
        if f.data_times != first.data_times {
            return Err(Error::invalid(
                "ic",
                "fits do not share the same data times",
            ));
        }
    }

    let mut rows = Vec::with_capacity(fits.len());
    for fit in fits {
        let base = fit.base_path.knot(0);
        let (m, km1) = base.shape();
        let basis = horizontal_basis(base, fit.mode)?;
        let tangent_dim = horizontal_dim(m, km1 + 1, fit.mode);
        debug_assert_eq!(basis.ncols(), tangent_dim);

        // per-dimension residual variances in the orthonormal horizontal basis
        let mut sums = vec![0.0; tangent_dim];
        for (i, v) in fit.data_tangent.iter().enumerate() {
            let t = fit.data_times[i];
            let predicted = unflatten_row(fit.spline.evaluate(t).as_slice(), m, km1);
            let resid = v - predicted;
            let flat = DMatrix::from_column_slice(m * km1, 1, resid.as_slice());
            let coords = basis.transpose() * flat;
            for (d, c) in coords.iter().enumerate() {
                sums[d] += c * c;
            }
        }
        let mut sum_log = 0.0;
        let mut interpolating = false;
        for s in &sums {
            let sigma2 = s / n as f64;
            if sigma2 < ZERO_RESIDUAL_TOL {
                interpolating = true;
            } else {
                sum_log += sigma2.ln();
            }
        }
        if interpolating {
            sum_log = f64::NEG_INFINITY;
        }

        let mean_df = fit.spline.degrees_of_freedom();
        let p = parameter_count(mean_df, tangent_dim);
        let label = match fit.spline.kind() {
            crate::spline::SplineKind::LeastSquaresLine => "geodesic".to_string(),
            crate::spline::SplineKind::LinearKnotted => format!("linear:{}", mean_df as usize),
            crate::spline::SplineKind::CubicSmoothing => "cubic".to_string(),
        };
        rows.push(IcRow {
            model: label,
            mean_df,
            tangent_dim,
            parameter_count: p,
            sum_log_sigma2: sum_log,
            aic: n as f64 * sum_log + 2.0 * p,
            bic: n as f64 * sum_log + (n as f64).ln() * p,
            interpolating,
        });
    }
    Ok(rows)
}
