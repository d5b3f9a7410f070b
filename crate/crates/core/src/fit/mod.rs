//! The shape-space smoothing spline: an iterative unwrap-fit-wrap loop over
//! a piecewise-geodesic base path, with convergence control, leave-one-out
//! cross-validation for the smoothing parameter, model variants, tangent PCA
//! and information-criterion comparison.

mod cv;
mod ic;
mod pca;

pub use cv::{cross_validate, CvEntry, CvOutcome};
pub use ic::{information_criteria, parameter_count, IcRow};
pub use pca::{procrustes_mean, procrustes_tangent_coordinates, tangent_pca, PcaResult};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{
    align_raw, shape_distance_raw, size_shape_distance_raw, to_pre_size_shape, to_preshape,
    Configuration, PiecewiseGeodesicPath, SpaceMode,
};
use crate::rolling::{unroll, unwrap_many, wrap_at, wrap_many, UnrolledPath};
use crate::spline::{fit_spline, EuclideanSpline, ScatterData, SplineSpec};
use crate::transport::TransportConfig;

/// The candidate smoothing parameters used when none are specified.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [1e-9, 1e-7, 1e-5, 1e-3, 1e-1];

/// Mean model fitted in the base tangent space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Least-squares line per coordinate: the single-geodesic model.
    Geodesic,
    /// Continuous piecewise-linear fit with equally spaced knots.
    Linear { knots: usize },
    /// Natural cubic smoothing spline.
    Cubic,
}

impl Model {
    pub fn label(&self) -> String {
        match self {
            Model::Geodesic => "geodesic".into(),
            Model::Linear { knots } => format!("linear:{knots}"),
            Model::Cubic => "cubic".into(),
        }
    }

    fn spec(&self, lambda: f64) -> SplineSpec {
        match self {
            Model::Geodesic => SplineSpec::LeastSquaresLine,
            Model::Linear { knots } => SplineSpec::LinearKnotted { num_knots: *knots },
            Model::Cubic => SplineSpec::CubicSmoothing { lambda },
        }
    }
}

/// Smoothing-parameter selection.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    /// Leave-one-out cross-validation over the given candidates.
    CrossValidate(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of interpolation points inserted between consecutive data
    /// times when building the base path.
    pub grid_points_between: usize,
    /// Convergence tolerance on the maximum shape displacement of the base
    /// path between iterations.
    pub epsilon: f64,
    /// Hard cap on the number of iterations; the best iterate is returned
    /// unconverged when reached.
    pub max_iterations: usize,
    pub lambda: LambdaChoice,
    pub model: Model,
    pub transport: TransportConfig,
    pub mode: SpaceMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            grid_points_between: 2,
            epsilon: 1e-5,
            max_iterations: 20,
            lambda: LambdaChoice::Fixed(1e-3),
            model: Model::Cubic,
            transport: TransportConfig::default(),
            mode: SpaceMode::Shape,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::invalid("fit config", "epsilon must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("fit config", "max_iterations must be >= 1"));
        }
        if self.transport.steps_per_unit < 1 {
            return Err(Error::invalid("fit config", "steps_per_unit must be >= 1"));
        }
        if let Model::Linear { knots } = self.model {
            if knots < 2 {
                return Err(Error::invalid(
                    "fit config",
                    "linear model needs >= 2 knots",
                ));
            }
        }
        Ok(())
    }
}

/// Converged (or best-iterate) output of the fitting loop.
#[derive(Debug, Clone)]
pub struct ShapeSplineFit {
    pub mode: SpaceMode,
    pub data_times: Vec<f64>,
    /// Data representatives after the final alignment pass.
    pub data_points: Vec<DMatrix<f64>>,
    /// Unwrapped data in the final base tangent space, one matrix per
    /// observation.
    pub data_tangent: Vec<DMatrix<f64>>,
    /// The base path the final Euclidean spline was fitted against.
    pub base_path: PiecewiseGeodesicPath,
    /// Unrolling of `base_path` into its base tangent space.
    pub unrolled: UnrolledPath,
    /// The final Euclidean spline in the base tangent space.
    pub spline: EuclideanSpline,
    /// Piecewise geodesic through the final fitted values over the grid.
    pub fitted_path: PiecewiseGeodesicPath,
    pub grid_times: Vec<f64>,
    /// Grid indices of the data times.
    pub data_grid_indices: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Maximum shape displacement of the base path, one entry per iteration.
    pub displacement_history: Vec<f64>,
    pub lambda_used: Option<f64>,
    pub cv_table: Option<Vec<CvEntry>>,
}

impl ShapeSplineFit {
    /// Fitted shapes over the grid (knots of the fitted path).
    pub fn fitted_knots(&self) -> &[DMatrix<f64>] {
        self.fitted_path.knots()
    }

    /// Fitted shapes at the data times.
    pub fn fitted_at_data_times(&self) -> Vec<&DMatrix<f64>> {
        self.data_grid_indices
            .iter()
            .map(|&g| self.fitted_path.knot(g))
            .collect()
    }

    /// Distance between two points in this fit's geometry.
    pub fn distance(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        point_distance(self.mode, a, b)
    }
}

pub(crate) fn point_distance(mode: SpaceMode, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    match mode {
        SpaceMode::Shape => shape_distance_raw(a, b),
        SpaceMode::SizeAndShape => size_shape_distance_raw(a, b),
    }
}

/// Flatten matrices into rows (column-major within each matrix).
pub(crate) fn flatten_rows(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = mats[0].len();
    DMatrix::from_fn(mats.len(), d, |i, j| mats[i][j])
}

pub(crate) fn unflatten_row(row: &[f64], nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(nrows, ncols, row)
}

pub(crate) fn data_points(data: &[Configuration], mode: SpaceMode) -> Result<Vec<DMatrix<f64>>> {
    data.iter()
        .map(|c| {
            Ok(match mode {
                SpaceMode::Shape => to_preshape(c)?.into_matrix(),
                SpaceMode::SizeAndShape => to_pre_size_shape(c)?.into_matrix(),
            })
        })
        .collect()
}

pub(crate) fn data_times(data: &[Configuration]) -> Result<Vec<f64>> {
    let times: Vec<f64> = data.iter().map(|c| c.time()).collect();
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            return Err(Error::DuplicateTimes {
                index: i,
                time: times[i],
            });
        }
    }
    Ok(times)
}

/// Grid times with `g` interpolation points per data interval; returns the
/// grid and the indices of the data times within it.
fn build_grid(times: &[f64], g: usize) -> (Vec<f64>, Vec<usize>) {
    let n = times.len();
    let mut grid = Vec::with_capacity((n - 1) * (g + 1) + 1);
    let mut idx = Vec::with_capacity(n);
    for i in 0..n - 1 {
        idx.push(grid.len());
        grid.push(times[i]);
        for j in 1..=g {
            grid.push(times[i] + (times[i + 1] - times[i]) * j as f64 / (g + 1) as f64);
        }
    }
    idx.push(grid.len());
    grid.push(times[n - 1]);
    (grid, idx)
}

/// Fit the shape spline to time-stamped configurations.
///
/// The loop: align the data sequentially, build the base path through grid
/// points of the data geodesic, then repeatedly unwrap the data into the
/// base tangent space, fit the Euclidean model, wrap the fitted grid values
/// back, rebuild the base path and re-align the data onto the fitted values,
/// until the maximum shape displacement over the grid falls below epsilon.
pub fn fit_shape_spline(data: &[Configuration], cfg: &FitConfig) -> Result<ShapeSplineFit> {
    cfg.validate()?;
    if data.len() < 3 {
        return Err(Error::TooFewPoints {
            got: data.len(),
            need: 3,
        });
    }
    let times = data_times(data)?;
    let points = data_points(data, cfg.mode)?;

    match (&cfg.lambda, cfg.model) {
        (LambdaChoice::CrossValidate(grid), Model::Cubic) => {
            let outcome = cross_validate(data, cfg, grid)?;
            let mut fit = fit_aligned(&points, &times, cfg, outcome.best_lambda)?;
            fit.cv_table = Some(outcome.table);
            Ok(fit)
        }
        (LambdaChoice::CrossValidate(_), _) => {
            // lambda does not enter the geodesic/linear models
            fit_aligned(&points, &times, cfg, f64::NAN)
        }
        (LambdaChoice::Fixed(lambda), _) => fit_aligned(&points, &times, cfg, *lambda),
    }
}

pub(crate) fn fit_aligned(
    points: &[DMatrix<f64>],
    times: &[f64],
    cfg: &FitConfig,
    lambda: f64,
) -> Result<ShapeSplineFit> {
    let (m, km1) = points[0].shape();
    for p in points {
        if p.shape() != (m, km1) {
            return Err(Error::invalid(
                "fit",
                "inconsistent configuration dimensions",
            ));
        }
    }
    let spec = cfg.model.spec(lambda);

    // Step 1: sequential Procrustes chaining (and the cut-locus guard).
    let data_path = PiecewiseGeodesicPath::from_raw(cfg.mode, points.to_vec(), times)?;
    let mut aligned: Vec<DMatrix<f64>> = data_path.knots().to_vec();

    // Steps 2-3: grid times and the initial base path through the data path.
    let (grid_times, data_grid_indices) = build_grid(times, cfg.grid_points_between);
    let mut grid_points = Vec::with_capacity(grid_times.len());
    for (g, &t) in grid_times.iter().enumerate() {
        if let Some(i) = data_grid_indices.iter().position(|&x| x == g) {
            grid_points.push(data_path.knot(i).clone());
        } else {
            grid_points.push(data_path.point_at_time(t)?);
        }
    }
    let mut base = PiecewiseGeodesicPath::from_raw(cfg.mode, grid_points, &grid_times)?;

    let mut history = Vec::new();
    let mut iteration = 0;
    loop {
        iteration += 1;

        // Step 4: unwrap the data with respect to the base path.
        let unrolled = unroll(&base, &cfg.transport)?;
        let pairs: Vec<(DMatrix<f64>, f64)> =
            aligned.iter().cloned().zip(times.iter().copied()).collect();
        let tangent = unwrap_many(&base, &unrolled, &pairs, &cfg.transport, false)?;

        // Step 5: Euclidean fit in the base tangent space, evaluated on the grid.
        let scatter = ScatterData::new(times.to_vec(), flatten_rows(&tangent))?;
        let spline = fit_spline(&scatter, &spec)?;
        let grid_values_flat = spline.evaluate_many(&grid_times);
        let grid_values: Vec<DMatrix<f64>> = (0..grid_times.len())
            .map(|i| unflatten_row(grid_values_flat.row(i).transpose().as_slice(), m, km1))
            .collect();

        // Step 6: wrap the fitted values back onto the manifold.
        let wrapped = wrap_many(
            &base,
            &unrolled,
            &grid_values,
            &grid_times,
            &cfg.transport,
            false,
        )?;

        // Step 7: chain the wrapped values into the next base path.
        let next = PiecewiseGeodesicPath::from_raw(cfg.mode, wrapped, &grid_times)?;

        // Step 8: convergence on the maximum displacement over the grid.
        let displacement = (0..grid_times.len())
            .map(|i| point_distance(cfg.mode, next.knot(i), base.knot(i)))
            .fold(0.0, f64::max);
        history.push(displacement);
        let converged = displacement < cfg.epsilon;

        if converged || iteration >= cfg.max_iterations {
            return Ok(ShapeSplineFit {
                mode: cfg.mode,
                data_times: times.to_vec(),
                data_points: aligned,
                data_tangent: tangent,
                base_path: base,
                unrolled,
                spline,
                fitted_path: next,
                grid_times,
                data_grid_indices,
                iterations: iteration,
                converged,
                displacement_history: history,
                lambda_used: (cfg.model == Model::Cubic).then_some(lambda),
                cv_table: None,
            });
        }

        // Re-align each data point onto the fitted value at its time.
        for (i, &g) in data_grid_indices.iter().enumerate() {
            let (fitted, _, _) = align_raw(next.knot(g), &aligned[i]);
            aligned[i] = fitted;
        }
        base = next;
    }
}

/// Evaluate the final spline at `t` in the base tangent space and wrap the
/// value back onto the manifold along the final base path.
pub fn predict_shape(fit: &ShapeSplineFit, t: f64, cfg: &TransportConfig) -> Result<DMatrix<f64>> {
    let (t0, t1) = (fit.base_path.t_start(), fit.base_path.t_end());
    if t < t0 || t > t1 {
        return Err(Error::TimeOutOfRange {
            t,
            t_start: t0,
            t_end: t1,
        });
    }
    let (m, km1) = fit.base_path.knot(0).shape();
    let v = fit.spline.evaluate(t);
    let value = unflatten_row(v.as_slice(), m, km1);
    wrap_at(&fit.base_path, &fit.unrolled, &value, t, cfg)
}
