//! Shared test fixtures: an independent sphere reference implementation
//! (closed forms only, no numerical integration) and small data builders.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use shapespline::geometry::PreShape;

pub fn to_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn to_row_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(1, v.len(), v.as_slice())
}

/// Closed-form sphere reference. Points are unit vectors; all operations are
/// exact up to elementary-function rounding.
pub mod sphere {
    use nalgebra::DVector;

    pub fn distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(y).clamp(-1.0, 1.0).acos()
    }

    pub fn log(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = distance(x, y);
        if d < 1e-12 {
            return DVector::zeros(x.len());
        }
        let dir = y - x * x.dot(y);
        let norm = dir.norm();
        dir * (d / norm)
    }

    pub fn exp(x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = v.norm();
        if n < 1e-300 {
            return x.clone();
        }
        x * n.cos() + v * (n.sin() / n)
    }

    /// Transport a tangent vector at `x` to the point at arc `t` along the
    /// unit-speed geodesic with initial direction `v0`.
    pub fn transport(
        x: &DVector<f64>,
        v0: &DVector<f64>,
        w: &DVector<f64>,
        t: f64,
    ) -> DVector<f64> {
        let velocity_t = x * (-t.sin()) + v0 * t.cos();
        w - (v0 - &velocity_t) * w.dot(v0)
    }

    /// Transport a tangent vector from `from` to `to` along their connecting
    /// geodesic.
    pub fn transport_between(
        from: &DVector<f64>,
        to: &DVector<f64>,
        w: &DVector<f64>,
    ) -> DVector<f64> {
        let d = distance(from, to);
        if d < 1e-12 {
            return w.clone();
        }
        let v0 = log(from, to) / d;
        transport(from, &v0, w, d)
    }

    /// A piecewise great-circle path through time-stamped knots.
    pub struct Path {
        pub knots: Vec<DVector<f64>>,
        pub times: Vec<f64>,
    }

    impl Path {
        /// Segment index and geodesic point for a time (left-open intervals,
        /// matching the production convention).
        pub fn locate(&self, t: f64) -> (usize, DVector<f64>) {
            let n = self.knots.len();
            let mut j = 0;
            while j + 2 < n && t > self.times[j + 1] {
                j += 1;
            }
            let frac = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
            let d = distance(&self.knots[j], &self.knots[j + 1]);
            let v = log(&self.knots[j], &self.knots[j + 1]) / d;
            let point = exp(&self.knots[j], &(v * (d * frac)));
            (j, point)
        }

        /// Knot images of the unrolling into the tangent space at knot 0.
        pub fn unroll(&self) -> Vec<DVector<f64>> {
            let n = self.knots.len();
            let mut images = vec![DVector::zeros(self.knots[0].len())];
            for i in 1..n {
                let mut inc = log(&self.knots[i - 1], &self.knots[i]);
                for j in (1..i).rev() {
                    inc = transport_between(&self.knots[j], &self.knots[j - 1], &inc);
                }
                images.push(&images[i - 1] + inc);
            }
            images
        }

        pub fn image_at(&self, t: f64) -> DVector<f64> {
            let images = self.unroll();
            let mut j = 0;
            while j + 2 < self.knots.len() && t > self.times[j + 1] {
                j += 1;
            }
            let w = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
            &images[j] + (&images[j + 1] - &images[j]) * w
        }

        /// Unwrap a point at time `t` into the tangent space at knot 0.
        pub fn unwrap(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
            let (j, gamma_t) = self.locate(t);
            let mut v = log(&gamma_t, x);
            v = transport_between(&gamma_t, &self.knots[j], &v);
            for jj in (1..=j).rev() {
                v = transport_between(&self.knots[jj], &self.knots[jj - 1], &v);
            }
            self.image_at(t) + v
        }

        /// Wrap a base tangent vector back onto the sphere at time `t`.
        pub fn wrap(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
            let (j, gamma_t) = self.locate(t);
            let mut w = v - self.image_at(t);
            for jj in 0..j {
                w = transport_between(&self.knots[jj], &self.knots[jj + 1], &w);
            }
            w = transport_between(&self.knots[j], &gamma_t, &w);
            exp(&gamma_t, &w)
        }
    }
}

/// Random unit vector.
pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

/// Random tangent vector at a unit vector `x`.
pub fn random_tangent(rng: &mut ChaCha8Rng, x: &DVector<f64>) -> DVector<f64> {
    let v = DVector::from_fn(x.len(), |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    &v - x * x.dot(&v)
}

/// Random sphere path with consecutive arcs in (0.4, 1.3), well inside the
/// cut-locus margin, plus the matching production path of 1 x (dim) pre-shapes.
pub fn random_sphere_path(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n_segments: usize,
) -> (sphere::Path, shapespline::geometry::PiecewiseGeodesicPath) {
    let mut knots = vec![random_unit(rng, dim)];
    for i in 0..n_segments {
        let t = random_tangent(rng, &knots[i]);
        let len = 0.4 + 0.9 * rng.gen::<f64>();
        let step = &t * (len / t.norm());
        knots.push(sphere::exp(&knots[i], &step));
    }
    let times: Vec<f64> = (0..=n_segments).map(|i| i as f64).collect();
    let preshapes: Vec<PreShape> = knots
        .iter()
        .map(|v| PreShape::new(to_row_matrix(v)).expect("unit vector"))
        .collect();
    let path = shapespline::geometry::PiecewiseGeodesicPath::through_preshapes(&preshapes, &times)
        .expect("valid sphere path");
    (sphere::Path { knots, times }, path)
}

/// Dense oracle for the skew-symmetric Sylvester equation: solve over the
/// orthonormal skew basis with a general dense LU.
pub fn dense_skew_solve(s: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = s.nrows();
    let basis = shapespline::geometry::skew_basis(m);
    let q = basis.len();
    let mut system = DMatrix::zeros(q, q);
    let mut rhs = DVector::zeros(q);
    for (p, ap) in basis.iter().enumerate() {
        for (r, ar) in basis.iter().enumerate() {
            system[(p, r)] = ap.dot(&(ar * s + s * ar));
        }
        rhs[p] = ap.dot(b);
    }
    let coef = system.lu().solve(&rhs).expect("oracle solvable");
    let mut a = DMatrix::zeros(m, m);
    for (c, ap) in coef.iter().zip(basis.iter()) {
        a += ap * *c;
    }
    a
}

/// Dense oracle for the cubic smoothing spline: build K = Q R^{-1} Q^T from
/// the band construction and solve (I + lambda K) f = y directly.
pub fn dense_smoother_fit(times: &[f64], y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = times.len();
    let q = n - 2;
    let h: Vec<f64> = (0..n - 1).map(|i| times[i + 1] - times[i]).collect();
    let mut qmat = DMatrix::zeros(n, q);
    let mut rmat = DMatrix::zeros(q, q);
    for a in 0..q {
        let i = a + 1;
        qmat[(i - 1, a)] = 1.0 / h[i - 1];
        qmat[(i, a)] = -(1.0 / h[i - 1] + 1.0 / h[i]);
        qmat[(i + 1, a)] = 1.0 / h[i];
        rmat[(a, a)] = (h[i - 1] + h[i]) / 3.0;
        if a + 1 < q {
            rmat[(a, a + 1)] = h[i] / 6.0;
            rmat[(a + 1, a)] = h[i] / 6.0;
        }
    }
    let rinv_qt = rmat.lu().solve(&qmat.transpose()).expect("R invertible");
    let k = &qmat * rinv_qt;
    let system = DMatrix::identity(n, n) + &k * lambda;
    system.lu().solve(y).expect("smoother system invertible")
}
