//! Closed-form geodesics and parallel transport on the unit sphere.
//!
//! With `m = 1` the rotation group is trivial and the shape machinery
//! reduces to the ordinary sphere, where transport along a great circle has
//! the exact form `w(t) = w - <w,v> (v - g'(t))`. These formulas serve as an
//! independent reference for the integrated transport.

use nalgebra::DVector;

/// Point of the unit-speed great circle from `x` in direction `v` at arc `t`.
pub fn sphere_geodesic_point(x: &DVector<f64>, v: &DVector<f64>, t: f64) -> DVector<f64> {
    x * t.cos() + v * t.sin()
}

/// Velocity of the same great circle at arc `t`.
pub fn sphere_geodesic_velocity(x: &DVector<f64>, v: &DVector<f64>, t: f64) -> DVector<f64> {
    x * (-t.sin()) + v * t.cos()
}

/// Parallel transport of the tangent vector `w` at `x` along the great
/// circle with unit initial direction `v0`, to the point at arc `t`.
pub fn sphere_transport(
    x: &DVector<f64>,
    v0: &DVector<f64>,
    w: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    debug_assert!((x.norm() - 1.0).abs() < 1e-8);
    debug_assert!((v0.norm() - 1.0).abs() < 1e-8);
    debug_assert!(x.dot(v0).abs() < 1e-8);
    debug_assert!(x.dot(w).abs() < 1e-8);
    let along = w.dot(v0);
    w - (v0 - sphere_geodesic_velocity(x, v0, t)) * along
}
