//! Euclidean spline fitting in the base tangent space: natural cubic
//! smoothing splines (banded Reinsch solve), knotted linear splines fitted by
//! least squares on the truncated-linear basis, and least-squares lines.
//!
//! The smoothing penalty is used exactly as written, `sum |y_i - f(t_i)|^2 +
//! lambda * integral |f''|^2`, with no normalization by the time range or the
//! number of points; lambda values are not directly comparable with library
//! conventions that rescale the penalty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Vector-valued observations at strictly increasing times.
#[derive(Debug, Clone)]
pub struct ScatterData {
    times: Vec<f64>,
    /// One row per observation.
    values: DMatrix<f64>,
}

impl ScatterData {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if times.len() != values.nrows() {
            return Err(Error::invalid("scatter data", "times/values mismatch"));
        }
        if times.len() < 2 {
            return Err(Error::TooFewPoints {
                got: times.len(),
                need: 2,
            });
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(Error::DuplicateTimes {
                    index: i,
                    time: times[i],
                });
            }
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("scatter data", "non-finite entries"));
        }
        Ok(ScatterData { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// A copy with observation `i` removed.
    pub fn without(&self, i: usize) -> Result<Self> {
        let times: Vec<f64> = self
            .times
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, t)| *t)
            .collect();
        let values = self.values.clone().remove_row(i);
        ScatterData::new(times, values)
    }
}

/// Which mean model a spline represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SplineKind {
    CubicSmoothing,
    LinearKnotted,
    LeastSquaresLine,
}

/// Fit specification, used directly and for leave-one-out refits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplineSpec {
    CubicSmoothing { lambda: f64 },
    LinearKnotted { num_knots: usize },
    LeastSquaresLine,
}

#[derive(Debug, Clone)]
enum Repr {
    NaturalCubic {
        knots: Vec<f64>,
        fitted: DMatrix<f64>,
        /// Second derivatives at the knots (zero at the boundary).
        curvature: DMatrix<f64>,
    },
    TruncatedLinear {
        knots: Vec<f64>,
        /// Coefficients of {1, t, (t - knot_j)_+ for interior j}, per column.
        coefficients: DMatrix<f64>,
    },
}

/// A fitted vector-valued spline on the data's time range, evaluated with
/// linear (natural) extension outside it.
#[derive(Debug, Clone)]
pub struct EuclideanSpline {
    kind: SplineKind,
    repr: Repr,
    lambda: Option<f64>,
    edf: f64,
    t_range: (f64, f64),
}

impl EuclideanSpline {
    pub fn kind(&self) -> SplineKind {
        self.kind
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Effective degrees of freedom of the mean model per coordinate:
    /// trace of the smoother matrix for the cubic, the number of basis
    /// functions otherwise.
    pub fn degrees_of_freedom(&self) -> f64 {
        self.edf
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::NaturalCubic { fitted, .. } => fitted.ncols(),
            Repr::TruncatedLinear { coefficients, .. } => coefficients.ncols(),
        }
    }

    pub fn time_range(&self) -> (f64, f64) {
        self.t_range
    }

    /// Fitted values at the data times (cubic representation only).
    pub fn fitted_values(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            Repr::NaturalCubic { fitted, .. } => Some(fitted),
            Repr::TruncatedLinear { .. } => None,
        }
    }

    pub fn evaluate(&self, t: f64) -> DVector<f64> {
        match &self.repr {
            Repr::NaturalCubic {
                knots,
                fitted,
                curvature,
            } => {
                let n = knots.len();
                let d = fitted.ncols();
                let mut out = DVector::zeros(d);
                if t < knots[0] {
                    let h = knots[1] - knots[0];
                    for j in 0..d {
                        let slope =
                            (fitted[(1, j)] - fitted[(0, j)]) / h - h * curvature[(1, j)] / 6.0;
                        out[j] = fitted[(0, j)] + (t - knots[0]) * slope;
                    }
                    return out;
                }
                if t > knots[n - 1] {
                    let h = knots[n - 1] - knots[n - 2];
                    for j in 0..d {
                        let slope = (fitted[(n - 1, j)] - fitted[(n - 2, j)]) / h
                            + h * curvature[(n - 2, j)] / 6.0;
                        out[j] = fitted[(n - 1, j)] + (t - knots[n - 1]) * slope;
                    }
                    return out;
                }
                let mut lo = 0;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if knots[mid] > t {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let h = knots[hi] - knots[lo];
                let a = (knots[hi] - t) / h;
                let b = (t - knots[lo]) / h;
                for j in 0..d {
                    out[j] = a * fitted[(lo, j)]
                        + b * fitted[(hi, j)]
                        + ((a * a * a - a) * curvature[(lo, j)]
                            + (b * b * b - b) * curvature[(hi, j)])
                            * h
                            * h
                            / 6.0;
                }
                out
            }
            Repr::TruncatedLinear {
                knots,
                coefficients,
            } => {
                let d = coefficients.ncols();
                let mut out = DVector::zeros(d);
                for j in 0..d {
                    let mut v = coefficients[(0, j)] + coefficients[(1, j)] * t;
                    for (idx, knot) in knots[1..knots.len() - 1].iter().enumerate() {
                        let hinge = (t - knot).max(0.0);
                        v += coefficients[(2 + idx, j)] * hinge;
                    }
                    out[j] = v;
                }
                out
            }
        }
    }

    /// Evaluate at many times, rows in input order.
    pub fn evaluate_many(&self, times: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(times.len(), d);
        for (i, &t) in times.iter().enumerate() {
            let v = self.evaluate(t);
            for j in 0..d {
                out[(i, j)] = v[j];
            }
        }
        out
    }
}

/// Pentadiagonal symmetric positive-definite system, stored by bands.
struct Pentadiagonal {
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

/// LDL^T factorization of a pentadiagonal SPD matrix.
struct PentaFactor {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Pentadiagonal {
    fn factor(&self) -> Result<PentaFactor> {
        let q = self.diag.len();
        let mut d = vec![0.0; q];
        let mut l1 = vec![0.0; q.saturating_sub(1)];
        let mut l2 = vec![0.0; q.saturating_sub(2)];
        for i in 0..q {
            let mut di = self.diag[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if di <= 0.0 || !di.is_finite() {
                return Err(Error::SingularDesign {
                    context: "smoothing system is not positive definite".into(),
                });
            }
            d[i] = di;
            if i + 1 < q {
                let mut v = self.off1[i];
                if i >= 1 {
                    v -= l2[i - 1] * l1[i - 1] * d[i - 1];
                }
                l1[i] = v / di;
            }
            if i + 2 < q {
                l2[i] = self.off2[i] / di;
            }
        }
        Ok(PentaFactor { d, l1, l2 })
    }
}

impl PentaFactor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let q = b.len();
        let mut w = b.to_vec();
        for i in 0..q {
            if i >= 1 {
                w[i] -= self.l1[i - 1] * w[i - 1];
            }
            if i >= 2 {
                w[i] -= self.l2[i - 2] * w[i - 2];
            }
        }
        for (wi, di) in w.iter_mut().zip(&self.d) {
            *wi /= di;
        }
        for i in (0..q).rev() {
            if i + 1 < q {
                w[i] -= self.l1[i] * w[i + 1];
            }
            if i + 2 < q {
                w[i] -= self.l2[i] * w[i + 2];
            }
        }
        w
    }
}

/// Assemble the Reinsch system `R + lambda Q^T Q` for the given knots.
fn reinsch_system(times: &[f64], lambda: f64) -> Pentadiagonal {
    let n = times.len();
    let q = n - 2;
    let h: Vec<f64> = (0..n - 1).map(|i| times[i + 1] - times[i]).collect();
    let mut diag = vec![0.0; q];
    let mut off1 = vec![0.0; q.saturating_sub(1)];
    let mut off2 = vec![0.0; q.saturating_sub(2)];
    for a in 0..q {
        let i = a + 1;
        let (hl, hr) = (h[i - 1], h[i]);
        diag[a] = (hl + hr) / 3.0
            + lambda * ((1.0 / hl).powi(2) + (1.0 / hl + 1.0 / hr).powi(2) + (1.0 / hr).powi(2));
        if a + 1 < q {
            let hn = h[i + 1];
            off1[a] = hr / 6.0 - lambda * (1.0 / hr) * (1.0 / hl + 2.0 / hr + 1.0 / hn);
        }
        if a + 2 < q {
            let hn = h[i + 1];
            off2[a] = lambda * (1.0 / hr) * (1.0 / hn);
        }
    }
    Pentadiagonal { diag, off1, off2 }
}

/// `Q^T y` for one coordinate.
fn second_differences(times: &[f64], y: &[f64]) -> Vec<f64> {
    let n = times.len();
    (1..n - 1)
        .map(|i| {
            let hl = times[i] - times[i - 1];
            let hr = times[i + 1] - times[i];
            y[i - 1] / hl - y[i] * (1.0 / hl + 1.0 / hr) + y[i + 1] / hr
        })
        .collect()
}

/// `Q gamma` (length n) from interior values gamma (length n-2).
fn apply_q(times: &[f64], gamma: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    for (a, g) in gamma.iter().enumerate() {
        let i = a + 1;
        let hl = times[i] - times[i - 1];
        let hr = times[i + 1] - times[i];
        out[i - 1] += g / hl;
        out[i] -= g * (1.0 / hl + 1.0 / hr);
        out[i + 1] += g / hr;
    }
    out
}

/// Natural cubic smoothing spline with knots at the data times, solved per
/// coordinate through the banded Reinsch system. Fitted values equal
/// `(I + lambda K)^{-1} y` with the standard natural-spline penalty matrix
/// `K = Q R^{-1} Q^T`; the effective degrees of freedom are the trace of the
/// smoother matrix.
pub fn fit_cubic_smoothing(data: &ScatterData, lambda: f64) -> Result<EuclideanSpline> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    let n = data.len();
    if n < 3 {
        return Err(Error::TooFewPoints { got: n, need: 3 });
    }
    let times = data.times();
    let system = reinsch_system(times, lambda);
    let factor = system.factor()?;

    let d = data.dim();
    let mut fitted = DMatrix::zeros(n, d);
    let mut curvature = DMatrix::zeros(n, d);
    for j in 0..d {
        let y: Vec<f64> = (0..n).map(|i| data.values()[(i, j)]).collect();
        let rhs = second_differences(times, &y);
        let gamma = factor.solve(&rhs);
        let qg = apply_q(times, &gamma);
        for i in 0..n {
            fitted[(i, j)] = y[i] - lambda * qg[i];
        }
        for (a, g) in gamma.iter().enumerate() {
            curvature[(a + 1, j)] = *g;
        }
    }

    // edf = n - lambda * tr((R + lambda Q^T Q)^{-1} Q^T Q)
    let q = n - 2;
    let mut trace = 0.0;
    for col in 0..q {
        // column `col` of Q^T Q equals Q^T applied to column `col` of Q
        let mut g = vec![0.0; q];
        g[col] = 1.0;
        let qtq_col = second_differences(times, &apply_q(times, &g));
        let sol = factor.solve(&qtq_col);
        trace += sol[col];
    }
    let edf = n as f64 - lambda * trace;

    Ok(EuclideanSpline {
        kind: SplineKind::CubicSmoothing,
        repr: Repr::NaturalCubic {
            knots: times.to_vec(),
            fitted,
            curvature,
        },
        lambda: Some(lambda),
        edf,
        t_range: (times[0], times[n - 1]),
    })
}

/// Continuous piecewise-linear least-squares fit with `num_knots` equally
/// spaced knots spanning the data range; slopes change only at the interior
/// knots. `num_knots = 2` reduces to the least-squares line.
pub fn fit_linear_knotted(data: &ScatterData, num_knots: usize) -> Result<EuclideanSpline> {
    if num_knots < 2 {
        return Err(Error::invalid("num_knots", "need at least 2 knots"));
    }
    let spline = fit_truncated_linear(data, num_knots)?;
    Ok(EuclideanSpline {
        kind: SplineKind::LinearKnotted,
        ..spline
    })
}

/// Ordinary least-squares line per coordinate.
pub fn fit_least_squares_line(data: &ScatterData) -> Result<EuclideanSpline> {
    fit_truncated_linear(data, 2)
}

fn fit_truncated_linear(data: &ScatterData, num_knots: usize) -> Result<EuclideanSpline> {
    let n = data.len();
    let times = data.times();
    let (t0, t1) = (times[0], times[n - 1]);
    let knots: Vec<f64> = (0..num_knots)
        .map(|i| t0 + (t1 - t0) * i as f64 / (num_knots - 1) as f64)
        .collect();
    let p = num_knots; // {1, t} plus one hinge per interior knot
    let mut design = DMatrix::zeros(n, p);
    for (i, &t) in times.iter().enumerate() {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = t;
        for (idx, knot) in knots[1..num_knots - 1].iter().enumerate() {
            design[(i, 2 + idx)] = (t - knot).max(0.0);
        }
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if n < p || smin <= 1e-10 * smax {
        return Err(Error::SingularDesign {
            context: format!(
                "{p} basis functions on {n} observations (condition {:.3e})",
                smax / smin.max(1e-300)
            ),
        });
    }
    let d = data.dim();
    let mut coefficients = DMatrix::zeros(p, d);
    for j in 0..d {
        let y = DVector::from_fn(n, |i, _| data.values()[(i, j)]);
        let c = svd.solve(&y, 0.0).map_err(|e| Error::SingularDesign {
            context: e.to_string(),
        })?;
        coefficients.set_column(j, &c);
    }
    Ok(EuclideanSpline {
        kind: if num_knots == 2 {
            SplineKind::LeastSquaresLine
        } else {
            SplineKind::LinearKnotted
        },
        repr: Repr::TruncatedLinear {
            knots,
            coefficients,
        },
        lambda: None,
        edf: p as f64,
        t_range: (t0, t1),
    })
}

/// Fit with a [`SplineSpec`].
pub fn fit_spline(data: &ScatterData, spec: &SplineSpec) -> Result<EuclideanSpline> {
    match spec {
        SplineSpec::CubicSmoothing { lambda } => fit_cubic_smoothing(data, *lambda),
        SplineSpec::LinearKnotted { num_knots } => fit_linear_knotted(data, *num_knots),
        SplineSpec::LeastSquaresLine => fit_least_squares_line(data),
    }
}

/// The n leave-one-out refits: the i-th spline omits observation i.
pub fn leave_one_out_fits(data: &ScatterData, spec: &SplineSpec) -> Result<Vec<EuclideanSpline>> {
    if data.len() < 4 {
        return Err(Error::TooFewPoints {
            got: data.len(),
            need: 4,
        });
    }
    (0..data.len())
        .map(|i| fit_spline(&data.without(i)?, spec))
        .collect()
}
