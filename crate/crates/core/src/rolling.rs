//! Unrolling a piecewise horizontal geodesic into its base tangent space,
//! unwrapping points with respect to it, and wrapping tangent vectors back.
//!
//! The image of the path under unrolling is piecewise linear: each knot image
//! adds the previous segment's inverse exponential, parallel-transported back
//! to the base through all earlier segments. Unwrapping at a time `t` takes
//! the inverse exponential at the path point, transports it back to the base
//! the same way, and translates by the unrolled image; wrapping reverses the
//! steps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{exp_raw, log_raw, PiecewiseGeodesicPath, SpaceMode};
use crate::transport::{integrate_segment, TransportConfig};

/// The piecewise-linear trace of a path in its base tangent space.
#[derive(Debug, Clone)]
pub struct UnrolledPath {
    base: DMatrix<f64>,
    mode: SpaceMode,
    times: Vec<f64>,
    knot_images: Vec<DMatrix<f64>>,
}

impl UnrolledPath {
    /// The base point (the path start) whose tangent space holds the image.
    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn mode(&self) -> SpaceMode {
        self.mode
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Images of the path knots; the first is zero.
    pub fn knot_images(&self) -> &[DMatrix<f64>] {
        &self.knot_images
    }

    /// Piecewise-linear interpolation of the unrolled path, linearly
    /// extended beyond the ends when `extrapolate` is set.
    pub fn image_at(&self, t: f64, extrapolate: bool) -> Result<DMatrix<f64>> {
        let n = self.times.len();
        let (t0, t1) = (self.times[0], self.times[n - 1]);
        if !extrapolate && (t < t0 || t > t1) {
            return Err(Error::TimeOutOfRange {
                t,
                t_start: t0,
                t_end: t1,
            });
        }
        let j = if t <= t0 {
            0
        } else if t > t1 {
            n - 2
        } else {
            match self
                .times
                .binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times"))
            {
                Ok(idx) => idx.saturating_sub(1),
                Err(idx) => idx - 1,
            }
            .min(n - 2)
        };
        let w = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        Ok(&self.knot_images[j] + (&self.knot_images[j + 1] - &self.knot_images[j]) * w)
    }
}

/// A point unwrapped into the base tangent space.
#[derive(Debug, Clone)]
pub struct UnwrappedPoint {
    pub vector: DMatrix<f64>,
    pub time: f64,
}

/// Unroll a path into the tangent space at its starting point.
pub fn unroll(path: &PiecewiseGeodesicPath, cfg: &TransportConfig) -> Result<UnrolledPath> {
    let n_seg = path.segments().len();
    // Increment i is the inverse exponential of knot i+1 at knot i; with the
    // path's alignment convention this is length * direction, exactly.
    let mut increments: Vec<DMatrix<f64>> = path
        .segments()
        .iter()
        .map(|seg| seg.direction() * seg.length())
        .collect();

    // Transport all increments down to knot 0 in one descending sweep so each
    // segment crossing shares its per-step frames across the batch.
    let mut ids: Vec<usize> = Vec::new();
    let mut batch: Vec<DMatrix<f64>> = Vec::new();
    for j in (1..n_seg).rev() {
        ids.push(j);
        batch.push(increments[j].clone());
        let seg = path.segment(j - 1);
        integrate_segment(seg, &mut batch, seg.length(), 0.0, cfg)?;
    }
    for (id, v) in ids.into_iter().zip(batch) {
        increments[id] = v;
    }

    let mut knot_images = Vec::with_capacity(n_seg + 1);
    knot_images.push(DMatrix::zeros(path.knot(0).nrows(), path.knot(0).ncols()));
    for inc in &increments {
        let prev = knot_images.last().expect("nonempty");
        knot_images.push(prev + inc);
    }
    Ok(UnrolledPath {
        base: path.knot(0).clone(),
        mode: path.mode(),
        times: path.times().to_vec(),
        knot_images,
    })
}

/// Evaluate the path at an interior time (a point on the stated segment at
/// the arc-length-proportional parameter).
pub fn interior_point(path: &PiecewiseGeodesicPath, t: f64) -> Result<DMatrix<f64>> {
    path.point_at_time(t)
}

fn check_pair(path: &PiecewiseGeodesicPath, unrolled: &UnrolledPath) -> Result<()> {
    if path.times() != unrolled.times() || (path.knot(0) - unrolled.base()).norm() > 1e-12 {
        return Err(Error::invalid(
            "rolling",
            "unrolled path does not belong to this base path",
        ));
    }
    Ok(())
}

fn unwrap_one(
    path: &PiecewiseGeodesicPath,
    point: &DMatrix<f64>,
    t: f64,
    cfg: &TransportConfig,
    extrapolate: bool,
) -> Result<(usize, DMatrix<f64>)> {
    let (j, s) = path.locate(t, extrapolate)?;
    let seg = path.segment(j);
    let gamma_t = seg.point_at_arc(s);
    let log = log_raw(path.mode(), &gamma_t, point)?;
    let mut batch = vec![log];
    integrate_segment(seg, &mut batch, s, 0.0, cfg)?;
    Ok((j, batch.pop().expect("one vector")))
}

/// Unwrap a point at time `t` with respect to the path, into the tangent
/// space at the path start. `point` is a pre-shape (shape mode) or
/// pre-size-and-shape (size-and-shape mode) representative; its rotation
/// alignment is handled internally.
pub fn unwrap_at(
    path: &PiecewiseGeodesicPath,
    unrolled: &UnrolledPath,
    point: &DMatrix<f64>,
    t: f64,
    cfg: &TransportConfig,
) -> Result<UnwrappedPoint> {
    check_pair(path, unrolled)?;
    let (j, mut v) = unwrap_one(path, point, t, cfg, false)?;
    for jj in (0..j).rev() {
        let seg = path.segment(jj);
        let mut batch = vec![v];
        integrate_segment(seg, &mut batch, seg.length(), 0.0, cfg)?;
        v = batch.pop().expect("one vector");
    }
    Ok(UnwrappedPoint {
        vector: unrolled.image_at(t, false)? + v,
        time: t,
    })
}

/// Unwrap many time-stamped points in one pass, sharing the per-segment
/// transports. With `extrapolate`, times slightly outside the path range use
/// the geodesic extension of the boundary segments.
pub fn unwrap_many(
    path: &PiecewiseGeodesicPath,
    unrolled: &UnrolledPath,
    points: &[(DMatrix<f64>, f64)],
    cfg: &TransportConfig,
    extrapolate: bool,
) -> Result<Vec<DMatrix<f64>>> {
    check_pair(path, unrolled)?;
    let n_seg = path.segments().len();
    let mut buckets: Vec<Vec<(usize, DMatrix<f64>)>> = vec![Vec::new(); n_seg];
    for (id, (point, t)) in points.iter().enumerate() {
        let (j, v) = unwrap_one(path, point, *t, cfg, extrapolate)?;
        buckets[j].push((id, v));
    }

    let mut out: Vec<Option<DMatrix<f64>>> = vec![None; points.len()];
    for (id, v) in buckets[0].drain(..) {
        out[id] = Some(v);
    }
    let mut ids: Vec<usize> = Vec::new();
    let mut batch: Vec<DMatrix<f64>> = Vec::new();
    for j in (1..n_seg).rev() {
        for (id, v) in buckets[j].drain(..) {
            ids.push(id);
            batch.push(v);
        }
        let seg = path.segment(j - 1);
        integrate_segment(seg, &mut batch, seg.length(), 0.0, cfg)?;
    }
    for (id, v) in ids.into_iter().zip(batch) {
        out[id] = Some(v);
    }

    points
        .iter()
        .zip(out)
        .map(|((_, t), v)| {
            Ok(unrolled.image_at(*t, extrapolate)? + v.expect("every point transported"))
        })
        .collect()
}

/// Wrap a tangent vector from the base tangent space back onto the manifold
/// at time `t`: translate by the unrolled image, transport forward along the
/// path and apply the exponential map.
pub fn wrap_at(
    path: &PiecewiseGeodesicPath,
    unrolled: &UnrolledPath,
    v: &DMatrix<f64>,
    t: f64,
    cfg: &TransportConfig,
) -> Result<DMatrix<f64>> {
    check_pair(path, unrolled)?;
    let mut results = wrap_many(path, unrolled, std::slice::from_ref(v), &[t], cfg, false)?;
    Ok(results.pop().expect("one result"))
}

/// Wrap many tangent vectors in one ascending sweep.
pub fn wrap_many(
    path: &PiecewiseGeodesicPath,
    unrolled: &UnrolledPath,
    values: &[DMatrix<f64>],
    times: &[f64],
    cfg: &TransportConfig,
    extrapolate: bool,
) -> Result<Vec<DMatrix<f64>>> {
    check_pair(path, unrolled)?;
    if values.len() != times.len() {
        return Err(Error::invalid("rolling", "values/times length mismatch"));
    }
    let n_seg = path.segments().len();
    struct Pending {
        id: usize,
        seg: usize,
        arc: f64,
        vector: DMatrix<f64>,
    }
    let mut active: Vec<Pending> = Vec::with_capacity(values.len());
    for (id, (v, t)) in values.iter().zip(times).enumerate() {
        let (seg, arc) = path.locate(*t, extrapolate)?;
        let vector = v - unrolled.image_at(*t, extrapolate)?;
        active.push(Pending {
            id,
            seg,
            arc,
            vector,
        });
    }

    let mut out: Vec<Option<DMatrix<f64>>> = vec![None; values.len()];
    for j in 0..n_seg {
        let (landing, continuing): (Vec<Pending>, Vec<Pending>) =
            active.into_iter().partition(|p| p.seg == j);
        let seg = path.segment(j);
        for p in landing {
            let mut batch = vec![p.vector];
            integrate_segment(seg, &mut batch, 0.0, p.arc, cfg)?;
            let w = batch.pop().expect("one vector");
            let gamma_t = seg.point_at_arc(p.arc);
            out[p.id] = Some(exp_raw(path.mode(), &gamma_t, &w)?);
        }
        let mut batch: Vec<DMatrix<f64>> = continuing.iter().map(|p| p.vector.clone()).collect();
        integrate_segment(seg, &mut batch, 0.0, seg.length(), cfg)?;
        active = continuing
            .into_iter()
            .zip(batch)
            .map(|(p, vector)| Pending { vector, ..p })
            .collect();
    }
    debug_assert!(active.is_empty());
    Ok(out.into_iter().map(|v| v.expect("all wrapped")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_map, inverse_exp, shape_distance, HorizontalVector, PreShape};
    use crate::sim::{random_preshape, random_unit_horizontal};
    use crate::transport::{transport_matrix_along_segment, Direction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geodesic_chain(seed: u64, lengths: &[f64]) -> PiecewiseGeodesicPath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shapes = vec![random_preshape(&mut rng, 8, 3)];
        for (i, &len) in lengths.iter().enumerate() {
            let dir = random_unit_horizontal(&mut rng, &shapes[i]);
            let step = HorizontalVector::new_unchecked(shapes[i].clone(), dir.matrix() * len);
            shapes.push(exp_map(&shapes[i], &step).unwrap());
        }
        let times: Vec<f64> = (0..shapes.len()).map(|i| i as f64).collect();
        PiecewiseGeodesicPath::through_preshapes(&shapes, &times).unwrap()
    }

    #[test]
    fn single_segment_unrolls_to_straight_line() {
        let path = geodesic_chain(60, &[0.7]);
        let unrolled = unroll(&path, &Default::default()).unwrap();
        assert_eq!(unrolled.knot_images()[0].norm(), 0.0);
        let x0 = PreShape::new(path.knot(0).clone()).unwrap();
        let x1 = PreShape::new(path.knot(1).clone()).unwrap();
        let log = inverse_exp(&x0, &x1).unwrap();
        assert!((&unrolled.knot_images()[1] - log.matrix()).norm() < 1e-10);
        assert!((unrolled.knot_images()[1].norm() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn image_increments_preserve_segment_lengths() {
        let path = geodesic_chain(61, &[0.5, 0.8, 0.4]);
        let unrolled = unroll(&path, &Default::default()).unwrap();
        let mut total = 0.0;
        for i in 0..3 {
            let inc = (&unrolled.knot_images()[i + 1] - &unrolled.knot_images()[i]).norm();
            assert!((inc - path.segment(i).length()).abs() < 1e-8);
            total += inc;
        }
        let expected: f64 = path.segments().iter().map(|s| s.length()).sum();
        assert!((total - expected).abs() < 1e-8);
    }

    #[test]
    fn turning_angle_matches_transported_velocities() {
        let path = geodesic_chain(62, &[0.6, 0.9]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        let imgs = unrolled.knot_images();
        let u = &imgs[1] - &imgs[0];
        let w = &imgs[2] - &imgs[1];
        let cos_img = u.dot(&w) / (u.norm() * w.norm());

        // transport the first segment's direction to the shared knot and
        // compare with the second segment's outgoing direction
        let seg0 = path.segment(0);
        let arrived =
            transport_matrix_along_segment(seg0, seg0.direction(), Direction::Forward, &cfg)
                .unwrap();
        let cos_geo = arrived.dot(path.segment(1).direction());
        assert!((cos_img - cos_geo).abs() < 1e-6);
        // and the analytic end velocity agrees with the transported one
        assert!((arrived - seg0.velocity_at_arc(seg0.length())).norm() < 1e-6);
    }

    #[test]
    fn unwrap_of_path_points_lands_on_the_image() {
        let path = geodesic_chain(63, &[0.5, 0.7]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        for &t in &[0.0, 0.4, 1.0, 1.6, 2.0] {
            let x = path.point_at_time(t).unwrap();
            let up = unwrap_at(&path, &unrolled, &x, t, &cfg).unwrap();
            let img = unrolled.image_at(t, false).unwrap();
            assert!((up.vector - img).norm() < 1e-9, "zero log at t = {t}");
        }
    }

    #[test]
    fn unwrap_norm_equals_shape_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let path = geodesic_chain(65, &[0.5, 0.7]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        for _ in 0..5 {
            let x = random_preshape(&mut rng, 8, 3);
            let t = rng.gen::<f64>() * 2.0;
            let gamma_t = PreShape::from_unnormalized(path.point_at_time(t).unwrap()).unwrap();
            let rho = shape_distance(&gamma_t, &x).unwrap();
            if rho > std::f64::consts::FRAC_PI_2 - 1e-3 {
                continue;
            }
            let up = unwrap_at(&path, &unrolled, x.matrix(), t, &cfg).unwrap();
            let img = unrolled.image_at(t, false).unwrap();
            assert!(((up.vector - img).norm() - rho).abs() < 1e-6);
        }
    }

    #[test]
    fn wrap_inverts_unwrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let path = geodesic_chain(67, &[0.6, 0.5, 0.7]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();

        // wrapping the image itself reproduces the path
        for &t in &[0.0, 0.7, 1.5, 2.2, 3.0] {
            let img = unrolled.image_at(t, false).unwrap();
            let x = wrap_at(&path, &unrolled, &img, t, &cfg).unwrap();
            let x = PreShape::from_unnormalized(x).unwrap();
            let gamma_t = PreShape::from_unnormalized(path.point_at_time(t).unwrap()).unwrap();
            assert!(shape_distance(&gamma_t, &x).unwrap() < 1e-9);
        }

        // round trip on nearby random shapes
        for _ in 0..5 {
            let t = rng.gen::<f64>() * 3.0;
            let base = PreShape::from_unnormalized(path.point_at_time(t).unwrap()).unwrap();
            let dir = random_unit_horizontal(&mut rng, &base);
            let step = HorizontalVector::new_unchecked(base.clone(), dir.matrix() * 0.5);
            let x = exp_map(&base, &step).unwrap();

            let up = unwrap_at(&path, &unrolled, x.matrix(), t, &cfg).unwrap();
            let back = wrap_at(&path, &unrolled, &up.vector, t, &cfg).unwrap();
            let back = PreShape::from_unnormalized(back).unwrap();
            assert!(shape_distance(&back, &x).unwrap() < 1e-6);

            // and unwrap of wrap returns the tangent vector
            let up2 = unwrap_at(&path, &unrolled, back.matrix(), t, &cfg).unwrap();
            assert!((&up2.vector - &up.vector).norm() < 1e-6);
        }
    }

    #[test]
    fn batched_and_single_point_versions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(68);
        let path = geodesic_chain(69, &[0.5, 0.6]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();

        let mut points = Vec::new();
        for _ in 0..4 {
            let t = rng.gen::<f64>() * 2.0;
            let base = PreShape::from_unnormalized(path.point_at_time(t).unwrap()).unwrap();
            let dir = random_unit_horizontal(&mut rng, &base);
            let step = HorizontalVector::new_unchecked(base.clone(), dir.matrix() * 0.4);
            points.push((exp_map(&base, &step).unwrap().into_matrix(), t));
        }
        let many = unwrap_many(&path, &unrolled, &points, &cfg, false).unwrap();
        for ((p, t), v) in points.iter().zip(&many) {
            let single = unwrap_at(&path, &unrolled, p, *t, &cfg).unwrap();
            assert!((v - single.vector).norm() < 1e-12);
        }

        let times: Vec<f64> = points.iter().map(|(_, t)| *t).collect();
        let wrapped = wrap_many(&path, &unrolled, &many, &times, &cfg, false).unwrap();
        for ((v, t), w) in many.iter().zip(&times).zip(&wrapped) {
            let single = wrap_at(&path, &unrolled, v, *t, &cfg).unwrap();
            assert!((w - single).norm() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_times_are_rejected() {
        let path = geodesic_chain(72, &[0.5]);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        let x = path.knot(0).clone();
        assert!(matches!(
            unwrap_at(&path, &unrolled, &x, -0.5, &cfg),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            wrap_at(&path, &unrolled, &DMatrix::zeros(3, 7), 1.5, &cfg),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn repeated_knots_give_degenerate_segments_that_transport_as_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let a = random_preshape(&mut rng, 8, 3);
        let dir = random_unit_horizontal(&mut rng, &a);
        let step = HorizontalVector::new_unchecked(a.clone(), dir.matrix() * 0.6);
        let b = exp_map(&a, &step).unwrap();
        // middle knot repeats the first shape
        let shapes = vec![a.clone(), a.clone(), b.clone()];
        let times = [0.0, 1.0, 2.0];
        let path = PiecewiseGeodesicPath::through_preshapes(&shapes, &times).unwrap();
        assert_eq!(path.segment(0).length(), 0.0);
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        assert_eq!(unrolled.knot_images()[1].norm(), 0.0);
        // unwrapping data through the degenerate segment still works
        let up = unwrap_at(&path, &unrolled, b.matrix(), 2.0, &cfg).unwrap();
        assert!((up.vector.norm() - 0.6).abs() < 1e-8);
        let back = wrap_at(&path, &unrolled, &up.vector, 2.0, &cfg).unwrap();
        let back = PreShape::from_unnormalized(back).unwrap();
        assert!(shape_distance(&back, &b).unwrap() < 1e-7);
    }

    #[test]
    fn interior_point_properties() {
        let path = geodesic_chain(70, &[0.5, 0.8]);
        // knot time returns the knot
        let p = interior_point(&path, 1.0).unwrap();
        assert!((p - path.knot(1)).norm() < 1e-12);
        // segment midpoint is equidistant from the endpoints
        let mid = PreShape::from_unnormalized(interior_point(&path, 0.5).unwrap()).unwrap();
        let a = PreShape::new(path.knot(0).clone()).unwrap();
        let b = PreShape::new(path.knot(1).clone()).unwrap();
        let da = shape_distance(&a, &mid).unwrap();
        let db = shape_distance(&b, &mid).unwrap();
        assert!((da - db).abs() < 1e-9);
        // sampled times lie on the analytic segment
        for &t in &[0.25, 0.75, 1.3, 1.9] {
            let (j, s) = path.locate(t, false).unwrap();
            let expect = path.segment(j).point_at_arc(s);
            assert!((interior_point(&path, t).unwrap() - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn collinear_data_unwrap_to_a_line() {
        // data on a single geodesic, base path through them: the unwrapped
        // points are collinear in the tangent space
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let x0 = random_preshape(&mut rng, 8, 3);
        let dir = random_unit_horizontal(&mut rng, &x0);
        let arcs = [0.0, 0.3, 0.55, 0.9, 1.2];
        let shapes: Vec<PreShape> = arcs
            .iter()
            .map(|&s| {
                let step = HorizontalVector::new_unchecked(x0.clone(), dir.matrix() * s);
                exp_map(&x0, &step).unwrap()
            })
            .collect();
        let times: Vec<f64> = (0..shapes.len()).map(|i| i as f64).collect();
        let path = PiecewiseGeodesicPath::through_preshapes(&shapes, &times).unwrap();
        let cfg = TransportConfig::default();
        let unrolled = unroll(&path, &cfg).unwrap();
        let points: Vec<(DMatrix<f64>, f64)> = shapes
            .iter()
            .zip(&times)
            .map(|(x, t)| (x.matrix().clone(), *t))
            .collect();
        let tangent = unwrap_many(&path, &unrolled, &points, &cfg, false).unwrap();
        // residual from the line through the first point in the first direction
        let d0 = (&tangent[4] - &tangent[0]).normalize();
        for v in &tangent {
            let rel = v - &tangent[0];
            let resid = &rel - &d0 * d0.dot(&rel);
            assert!(resid.norm() < 1e-6);
        }
    }
}
