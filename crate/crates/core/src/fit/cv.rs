//! Leave-one-out cross-validation of the smoothing parameter.
//!
//! For each candidate lambda and each observation, the shape spline is
//! refitted from scratch without that observation; the score accumulates the
//! squared tangent-space residual between the held-out shape, unwrapped with
//! respect to the fold's fitted path, and the fold's unrolled spline
//! evaluated at the held-out time. Boundary folds evaluate the spline by its
//! natural linear extension and unwrap along the geodesic extension of the
//! boundary segment.

use super::{data_points, data_times, fit_aligned, unflatten_row, FitConfig};
use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::rolling::unwrap_many;

/// One row of the cross-validation table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CvEntry {
    pub lambda: f64,
    /// Mean squared tangent residual, when every fold succeeded.
    pub score: Option<f64>,
    /// Reason this lambda was invalidated, when a fold failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best_lambda: f64,
    pub table: Vec<CvEntry>,
}

/// Run leave-one-out cross-validation over a lambda grid. A fold that fails
/// (non-finite fit, cut-locus unwrap) invalidates the lambda with a recorded
/// reason rather than aborting the whole run.
pub fn cross_validate(data: &[Configuration], cfg: &FitConfig, grid: &[f64]) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::invalid("cv", "empty lambda grid"));
    }
    let n = data.len();
    if n < 4 {
        return Err(Error::TooFewPoints { got: n, need: 4 });
    }
    let times = data_times(data)?;
    let points = data_points(data, cfg.mode)?;
    let (m, km1) = points[0].shape();

    let mut table = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut sum = 0.0;
        let mut failure: Option<String> = None;
        for i in 0..n {
            let fold_points: Vec<_> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            let fold_times: Vec<f64> = times
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| *t)
                .collect();
            let outcome = fit_aligned(&fold_points, &fold_times, cfg, lambda).and_then(|fit| {
                let predicted = unflatten_row(fit.spline.evaluate(times[i]).as_slice(), m, km1);
                let held_out = vec![(points[i].clone(), times[i])];
                let unwrapped = unwrap_many(
                    &fit.base_path,
                    &fit.unrolled,
                    &held_out,
                    &cfg.transport,
                    true,
                )?;
                Ok((&unwrapped[0] - predicted).norm_squared())
            });
            match outcome {
                Ok(sq) => sum += sq,
                Err(e) => {
                    failure = Some(format!("fold {i}: {e}"));
                    break;
                }
            }
        }
        table.push(CvEntry {
            lambda,
            score: failure.is_none().then_some(sum / n as f64),
            failure,
        });
    }

    let best = table
        .iter()
        .filter_map(|e| e.score.map(|s| (e.lambda, s)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite scores"))
        .ok_or_else(|| Error::Validation {
            message: "cross-validation failed for every lambda in the grid".into(),
        })?;
    Ok(CvOutcome {
        best_lambda: best.0,
        table,
    })
}
