//! Horizontal geodesics, exponential maps and piecewise-geodesic paths, in
//! both the shape and the size-and-shape setting.

use nalgebra::DMatrix;

use super::preshape::{HorizontalVector, PreShape, PreSizeShape};
use super::procrustes::{align_raw, shape_distance_raw};
use crate::error::{Error, Result};

/// Margin below pi/2 at which the shortest shape geodesic is treated as
/// non-unique.
pub(crate) const CUT_LOCUS_MARGIN: f64 = 1e-8;
/// Shape distances below this are treated as zero: they pass through arccos,
/// whose resolution near coincident inputs is only about 1.5e-8 in f64.
pub(crate) const ZERO_SHAPE_DISTANCE_TOL: f64 = 1e-7;
/// Size-and-shape distances resolve to full precision.
pub(crate) const ZERO_SIZE_DISTANCE_TOL: f64 = 1e-12;

fn zero_tol(mode: SpaceMode) -> f64 {
    match mode {
        SpaceMode::Shape => ZERO_SHAPE_DISTANCE_TOL,
        SpaceMode::SizeAndShape => ZERO_SIZE_DISTANCE_TOL,
    }
}

/// Which quotient geometry a path or segment lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SpaceMode {
    /// Translation, scale and rotation removed: horizontal great-circle arcs
    /// on the unit sphere of m x (k-1) matrices.
    Shape,
    /// Translation and rotation removed, scale retained: straight lines.
    SizeAndShape,
}

/// A unit-speed horizontal geodesic segment with a time interval attached.
///
/// Shape mode evaluates `start*cos(s) + direction*sin(s)`; size-and-shape
/// mode evaluates `start + s*direction`. `direction` has unit Frobenius norm
/// unless the segment is degenerate (zero length), where it is zero.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    mode: SpaceMode,
    start: DMatrix<f64>,
    direction: DMatrix<f64>,
    length: f64,
    t_start: f64,
    t_end: f64,
}

impl GeodesicSegment {
    pub(crate) fn from_aligned(
        mode: SpaceMode,
        start: DMatrix<f64>,
        aligned_end: &DMatrix<f64>,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        let length = match mode {
            SpaceMode::Shape => start.dot(aligned_end).clamp(-1.0, 1.0).acos(),
            SpaceMode::SizeAndShape => (aligned_end - &start).norm(),
        };
        if mode == SpaceMode::Shape && length >= std::f64::consts::FRAC_PI_2 - CUT_LOCUS_MARGIN {
            return Err(Error::CutLocus { rho: length });
        }
        let direction = if length < zero_tol(mode) {
            DMatrix::zeros(start.nrows(), start.ncols())
        } else {
            match mode {
                SpaceMode::Shape => (aligned_end - &start * length.cos()) / length.sin(),
                SpaceMode::SizeAndShape => (aligned_end - &start) / length,
            }
        };
        Ok(GeodesicSegment {
            mode,
            start,
            direction,
            length,
            t_start,
            t_end,
        })
    }

    pub fn mode(&self) -> SpaceMode {
        self.mode
    }

    pub fn start(&self) -> &DMatrix<f64> {
        &self.start
    }

    /// Unit tangent at the start (zero for a degenerate segment).
    pub fn direction(&self) -> &DMatrix<f64> {
        &self.direction
    }

    /// Arc length; equals the shape distance between the endpoints.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Point at arc-length parameter `s` (may lie outside `[0, length]` for
    /// geodesic extension).
    pub fn point_at_arc(&self, s: f64) -> DMatrix<f64> {
        match self.mode {
            SpaceMode::Shape => &self.start * s.cos() + &self.direction * s.sin(),
            SpaceMode::SizeAndShape => &self.start + &self.direction * s,
        }
    }

    /// Velocity at arc-length parameter `s`, evaluated analytically.
    pub fn velocity_at_arc(&self, s: f64) -> DMatrix<f64> {
        match self.mode {
            SpaceMode::Shape => &self.start * (-s.sin()) + &self.direction * s.cos(),
            SpaceMode::SizeAndShape => self.direction.clone(),
        }
    }

    pub fn end_point(&self) -> DMatrix<f64> {
        self.point_at_arc(self.length)
    }

    /// Arc-length parameter for a time in `[t_start, t_end]` (proportional
    /// parametrization). Values outside the interval extrapolate.
    pub fn arc_for_time(&self, t: f64) -> f64 {
        let span = self.t_end - self.t_start;
        if span <= 0.0 {
            return 0.0;
        }
        self.length * (t - self.t_start) / span
    }
}

/// Shortest horizontal geodesic between two shapes, parametrized on the unit
/// time interval. Errors when the shapes coincide or reach the cut locus.
pub fn geodesic_between(x1: &PreShape, x2: &PreShape) -> Result<GeodesicSegment> {
    if x1.dims() != x2.dims() {
        return Err(Error::invalid("geodesic", "dimension mismatch"));
    }
    let rho = shape_distance_raw(x1.matrix(), x2.matrix());
    if rho < ZERO_SHAPE_DISTANCE_TOL {
        return Err(Error::ZeroDistance { rho });
    }
    if rho >= std::f64::consts::FRAC_PI_2 - CUT_LOCUS_MARGIN {
        return Err(Error::CutLocus { rho });
    }
    let (aligned, _, _) = align_raw(x1.matrix(), x2.matrix());
    GeodesicSegment::from_aligned(SpaceMode::Shape, x1.matrix().clone(), &aligned, 0.0, 1.0)
}

/// Straight-line horizontal geodesic between two size-and-shapes, after the
/// rotation alignment. A zero-length (degenerate) segment is permitted.
pub fn ss_geodesic_between(x1: &PreSizeShape, x2: &PreSizeShape) -> Result<GeodesicSegment> {
    if x1.matrix().shape() != x2.matrix().shape() {
        return Err(Error::invalid("geodesic", "dimension mismatch"));
    }
    let (aligned, _, _) = align_raw(x1.matrix(), x2.matrix());
    GeodesicSegment::from_aligned(
        SpaceMode::SizeAndShape,
        x1.matrix().clone(),
        &aligned,
        0.0,
        1.0,
    )
}

pub(crate) fn exp_raw(mode: SpaceMode, x: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match mode {
        SpaceMode::Shape => {
            let norm = v.norm();
            if norm < 1e-300 {
                return Ok(x.clone());
            }
            if norm >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::VectorTooLong { norm });
            }
            Ok(x * norm.cos() + v * (norm.sin() / norm))
        }
        SpaceMode::SizeAndShape => Ok(x + v),
    }
}

/// Inverse exponential as a raw matrix; zero when the points coincide.
pub(crate) fn log_raw(mode: SpaceMode, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (aligned, _, _) = align_raw(x, y);
    match mode {
        SpaceMode::Shape => {
            let rho = x.dot(&aligned).clamp(-1.0, 1.0).acos();
            if rho < ZERO_SHAPE_DISTANCE_TOL {
                return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
            }
            if rho >= std::f64::consts::FRAC_PI_2 - CUT_LOCUS_MARGIN {
                return Err(Error::CutLocus { rho });
            }
            Ok((aligned - x * rho.cos()) * (rho / rho.sin()))
        }
        SpaceMode::SizeAndShape => Ok(aligned - x),
    }
}

/// Exponential map at `x` along a horizontal vector. The result is a
/// pre-shape; requires `|v| < pi/2`.
pub fn exp_map(x: &PreShape, v: &HorizontalVector) -> Result<PreShape> {
    let raw = exp_raw(SpaceMode::Shape, x.matrix(), v.matrix())?;
    PreShape::from_unnormalized(raw)
}

/// Inverse exponential map: the horizontal vector at `x1` whose norm is the
/// shape distance and whose geodesic reaches `x2`.
pub fn inverse_exp(x1: &PreShape, x2: &PreShape) -> Result<HorizontalVector> {
    let seg = geodesic_between(x1, x2)?;
    let v = seg.direction() * seg.length();
    Ok(HorizontalVector::new_unchecked(x1.clone(), v))
}

/// A continuous piecewise horizontal geodesic through time-stamped points.
///
/// Construction rotates each successive point onto its predecessor
/// (Procrustes chaining), so stored knots satisfy the alignment convention
/// and each segment's endpoint equals the next knot.
#[derive(Debug, Clone)]
pub struct PiecewiseGeodesicPath {
    mode: SpaceMode,
    times: Vec<f64>,
    knots: Vec<DMatrix<f64>>,
    segments: Vec<GeodesicSegment>,
}

impl PiecewiseGeodesicPath {
    pub(crate) fn from_raw(
        mode: SpaceMode,
        points: Vec<DMatrix<f64>>,
        times: &[f64],
    ) -> Result<Self> {
        if points.len() != times.len() {
            return Err(Error::invalid("path", "points/times length mismatch"));
        }
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                got: points.len(),
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
        // Procrustes chaining: rotate each point onto the previous knot.
        let mut knots: Vec<DMatrix<f64>> = Vec::with_capacity(points.len());
        knots.push(points[0].clone());
        for p in points.iter().skip(1) {
            let (aligned, _, _) = align_raw(knots.last().expect("nonempty"), p);
            knots.push(aligned);
        }
        let mut segments = Vec::with_capacity(knots.len() - 1);
        for i in 0..knots.len() - 1 {
            segments.push(GeodesicSegment::from_aligned(
                mode,
                knots[i].clone(),
                &knots[i + 1],
                times[i],
                times[i + 1],
            )?);
        }
        Ok(PiecewiseGeodesicPath {
            mode,
            times: times.to_vec(),
            knots,
            segments,
        })
    }

    /// Build a shape-space path through pre-shapes at strictly increasing
    /// times. Consecutive shape distances must stay below the cut-locus
    /// margin.
    pub fn through_preshapes(shapes: &[PreShape], times: &[f64]) -> Result<Self> {
        let points = shapes.iter().map(|x| x.matrix().clone()).collect();
        Self::from_raw(SpaceMode::Shape, points, times)
    }

    /// Build a size-and-shape path through pre-size-and-shapes.
    pub fn through_pre_size_shapes(shapes: &[PreSizeShape], times: &[f64]) -> Result<Self> {
        let points = shapes.iter().map(|x| x.matrix().clone()).collect();
        Self::from_raw(SpaceMode::SizeAndShape, points, times)
    }

    pub fn mode(&self) -> SpaceMode {
        self.mode
    }

    pub fn n_knots(&self) -> usize {
        self.knots.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knot(&self, i: usize) -> &DMatrix<f64> {
        &self.knots[i]
    }

    pub fn knots(&self) -> &[DMatrix<f64>] {
        &self.knots
    }

    pub fn segments(&self) -> &[GeodesicSegment] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &GeodesicSegment {
        &self.segments[i]
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Locate a time on the path: the segment index and the arc-length
    /// parameter within it. Uses the left-open convention: a knot time maps
    /// to the end of the preceding segment. With `extrapolate`, times beyond
    /// the range map onto geodesic extensions of the boundary segments.
    pub fn locate(&self, t: f64, extrapolate: bool) -> Result<(usize, f64)> {
        let (t0, t1) = (self.t_start(), self.t_end());
        if !extrapolate && (t < t0 || t > t1) {
            return Err(Error::TimeOutOfRange {
                t,
                t_start: t0,
                t_end: t1,
            });
        }
        if t <= t0 {
            let seg = &self.segments[0];
            return Ok((0, seg.arc_for_time(t)));
        }
        if t > t1 {
            let j = self.segments.len() - 1;
            let seg = &self.segments[j];
            return Ok((j, seg.arc_for_time(t)));
        }
        // first segment whose half-open interval (t_j, t_{j+1}] contains t
        let j = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times"))
        {
            Ok(idx) => idx.saturating_sub(1),
            Err(idx) => idx - 1,
        };
        let j = j.min(self.segments.len() - 1);
        Ok((j, self.segments[j].arc_for_time(t)))
    }

    /// Evaluate the path at a time inside its range.
    pub fn point_at_time(&self, t: f64) -> Result<DMatrix<f64>> {
        let (j, s) = self.locate(t, false)?;
        Ok(self.segments[j].point_at_arc(s))
    }
}
