//! Smoothing splines for landmark shape trajectories on Kendall shape
//! spaces, in any dimension m >= 1 (including 3D).
//!
//! Time-indexed landmark configurations are reduced to pre-shapes, unwrapped
//! into a rolling base tangent space via numerically integrated parallel
//! transport along a piecewise horizontal geodesic, fitted there with
//! Euclidean splines, and wrapped back. The crate provides the geometric
//! primitives (`geometry`), the transport integrator (`transport`), the
//! unrolling machinery (`rolling`), Euclidean spline solvers (`spline`), the
//! iterative fitting loop with cross-validation, PCA and model comparison
//! (`fit`), reproducible simulation studies (`sim`) and file formats (`io`).

pub mod error;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod rolling;
pub mod sim;
pub mod spline;
pub mod transport;

mod linalg;

pub use error::{Error, Result};
