//! Pre-shape and shape-space primitives: Helmert reduction, Procrustes
//! alignment, Riemannian distances, horizontal geodesics, exponential maps
//! and tangent-space projections, together with their size-and-shape
//! analogues.

mod configuration;
mod geodesic;
mod preshape;
mod procrustes;
mod tangent;

pub use configuration::{
    centroid_size, helmert_submatrix, landmarks_from_reduced, to_pre_size_shape, to_preshape,
    Configuration,
};
pub use geodesic::{
    exp_map, geodesic_between, inverse_exp, ss_geodesic_between, GeodesicSegment,
    PiecewiseGeodesicPath, SpaceMode,
};
pub use preshape::{HorizontalVector, PreShape, PreSizeShape};
pub use procrustes::{
    procrustes_fit, shape_distance, size_shape_distance, ss_procrustes_fit, ProcrustesFit,
    SizeShapeFit,
};
pub use tangent::{
    canonical_rotation, horizontal_basis, horizontal_dim, project_horizontal, project_tangent,
    skew_basis,
};

pub(crate) use geodesic::{exp_raw, log_raw};
pub(crate) use procrustes::{align_raw, shape_distance_raw, size_shape_distance_raw};
