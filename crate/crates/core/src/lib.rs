//! Non-neural core of a category-level 9-DoF object pose pipeline.
//!
//! - [`geometry`]: pinhole camera, 9-DoF poses, depth back-projection and
//!   point sampling.
//! - [`pnp`]: rotation and scale-free translation from the 8 projected
//!   cuboid corners of a monocular detector.
//! - [`fusion`]: bilinear feature sampling and RGB/depth fusion operators.
//! - [`mesh`] and [`mpl`]: mesh loading, Poisson-disk sample elimination,
//!   and the mesh-point loss with its analytic gradient.
//! - [`metrics`]: oriented box IoU, symmetry-aware pose errors and
//!   threshold accuracies.
//! - [`eval`]: JSON-lines records, the evaluation harness, report rendering
//!   and the synthetic scene generator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod image_io;
pub mod mesh;
pub mod metrics;
pub mod mpl;
pub mod pnp;
pub mod symmetry;

pub use error::{Error, Result};
pub use geometry::{
    backproject, cuboid_corners, orthonormalize, project_point, sample_points, BinaryMask,
    CameraIntrinsics, DepthImage, PointCloud, Pose9DoF,
};
pub use symmetry::SymmetryClass;

/// 3-vector of `f64`.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrix of `f64`.
pub type Mat3 = nalgebra::Matrix3<f64>;
