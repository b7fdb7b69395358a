//! Depth-geometry toolkit.
//!
//! Reconstructs point clouds from depth maps, samples long-range point
//! triplets and their virtual normals, evaluates the virtual-normal,
//! pairwise, scale-and-shift-invariant and surface-normal losses (with
//! analytic depth gradients for the first and third), recovers and scores
//! surface normals, aligns and evaluates affine-invariant depth, builds
//! multi-curriculum batch schedules, and runs the sphere noise-robustness
//! experiment.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod curriculum;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod knn;
pub mod losses;
pub mod sampling;
pub mod sphere;
pub mod surface_normal;

pub use affine::AffineParams;
pub use error::{Error, Result};
pub use geometry::{back_project, transform_cloud, CameraIntrinsics, DepthMap, Point3, PointCloud};
pub use sampling::{sample_triplets, virtual_normals, NormalSet, SamplingConstraints, TripletSet};
