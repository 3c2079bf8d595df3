//! Camera model, 9-DoF poses, depth back-projection and point sampling.
//!
//! Conventions used throughout the crate:
//! - camera frame is x right, y down, z forward (meters);
//! - pixel `(u, v)` is column `u`, row `v`, with pixel centers at integer
//!   coordinates;
//! - depth images hold 16-bit millimeters, 0 meaning "no measurement".

use nalgebra::{Matrix3, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Points closer to the camera plane than this are rejected.
pub const MIN_DEPTH: f64 = 1e-9;

/// Tolerance on `RᵀR = I` (per entry) and `det R = 1` for stored rotations.
pub const ROTATION_TOL: f64 = 1e-6;

/// Number of points fed to the depth network.
pub const DEFAULT_SAMPLE_COUNT: usize = 1028;

/// Pinhole intrinsics without distortion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::invalid(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::invalid(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Intrinsics of the REAL275 real-scene camera.
    pub fn real275() -> Self {
        Self {
            fx: 591.0125,
            fy: 590.16775,
            cx: 322.525,
            cy: 244.11084,
            width: 640,
            height: 480,
        }
    }

    /// Projects a camera-frame point.
    pub fn project(&self, p: &Vec3) -> Result<(f64, f64)> {
        if !(p.z > MIN_DEPTH) {
            return Err(Error::BehindCamera { z: p.z });
        }
        Ok((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Camera-frame point at pixel `(u, v)` and depth `z` (meters).
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }
}

/// Rotation, translation (m) and per-axis size (m) of an object.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose9DoF {
    pub rotation: Mat3,
    pub translation: Vec3,
    pub size: Vec3,
}

impl Pose9DoF {
    pub fn new(rotation: Mat3, translation: Vec3, size: Vec3) -> Result<Self> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        check_size(&size)?;
        Ok(Self {
            rotation,
            translation,
            size,
        })
    }

    /// Object-frame point mapped into the camera frame.
    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// The 8 box corners in the camera frame, canonical order.
    pub fn corners(&self) -> [Vec3; 8] {
        let local = cuboid_corners_unchecked(&self.size);
        local.map(|c| self.transform(&c))
    }
}

pub(crate) fn check_size(size: &Vec3) -> Result<()> {
    if size.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "size components must be positive, got ({}, {}, {})",
            size.x, size.y, size.z
        )))
    }
}

/// Largest entry of `|RᵀR − I|` and `|det R − 1|`.
pub fn rotation_deviation(r: &Mat3) -> f64 {
    let ortho = (r.transpose() * r - Mat3::identity()).abs().max();
    ortho.max((r.determinant() - 1.0).abs())
}

pub(crate) fn check_rotation(r: &Mat3) -> Result<()> {
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("rotation must be finite"));
    }
    let dev = rotation_deviation(r);
    if dev > ROTATION_TOL {
        return Err(Error::invalid(format!(
            "matrix is not a rotation (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Rotation by `angle` radians about `axis` (normalized internally).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let u = axis.normalize();
    let (s, c) = angle.sin_cos();
    let k = u.cross_matrix();
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

/// Geodesic distance between two rotations, in radians.
///
/// Uses `atan2(|vee(Q − Qᵀ)| / 2, (tr Q − 1) / 2)` for `Q = AᵀB`, which equals
/// `acos((tr Q − 1) / 2)` but keeps full precision near 0 and π.
pub fn geodesic_angle(a: &Mat3, b: &Mat3) -> f64 {
    let q = a.transpose() * b;
    let cos = (q.trace() - 1.0) / 2.0;
    let skew = Vec3::new(
        q[(2, 1)] - q[(1, 2)],
        q[(0, 2)] - q[(2, 0)],
        q[(1, 0)] - q[(0, 1)],
    );
    let sin = skew.norm() / 2.0;
    sin.atan2(cos)
}

/// Angle between two vectors in radians, accurate for nearly parallel inputs.
pub fn vector_angle(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Camera-frame depths measured in millimeters, 16-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, `height × width`.
    pub values: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, values: Vec<u16>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "depth buffer has {} values for {width}x{height}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Quantizes metric depth to millimeters (round to nearest). Non-finite,
    /// non-positive or out-of-range depths become 0.
    pub fn from_meters(width: u32, height: u32, meters: &[f64]) -> Result<Self> {
        let values = meters
            .iter()
            .map(|&z| {
                let mm = (z * 1000.0).round();
                if z.is_finite() && mm >= 1.0 && mm <= u16::MAX as f64 {
                    mm as u16
                } else {
                    0
                }
            })
            .collect();
        Self::new(width, height, values)
    }

    pub fn get(&self, u: u32, v: u32) -> u16 {
        self.values[(v * self.width + u) as usize]
    }
}

/// Per-pixel object membership.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    /// Row-major, `height × width`.
    pub values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, values: Vec<bool>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "mask buffer has {} values for {width}x{height}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![true; width as usize * height as usize],
        }
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&m| m).count()
    }
}

/// Camera-frame points in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !points.iter().all(|p| p.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Corners of an origin-centered box with the given extents.
///
/// Corner `i` takes `+size/2` on axis `k` when bit `k` of `i` is set and
/// `−size/2` otherwise (bit 0 → x, bit 1 → y, bit 2 → z).
pub fn cuboid_corners(size: &Vec3) -> Result<[Vec3; 8]> {
    check_size(size)?;
    Ok(cuboid_corners_unchecked(size))
}

pub(crate) fn cuboid_corners_unchecked(size: &Vec3) -> [Vec3; 8] {
    let h = size / 2.0;
    std::array::from_fn(|i| {
        let sign = |bit: usize| if i >> bit & 1 == 1 { 1.0 } else { -1.0 };
        Vec3::new(sign(0) * h.x, sign(1) * h.y, sign(2) * h.z)
    })
}

/// Projects object point `x` under pose `(rotation, translation)`.
pub fn project_point(
    k: &CameraIntrinsics,
    rotation: &Mat3,
    translation: &Vec3,
    x: &Vec3,
) -> Result<(f64, f64)> {
    k.project(&(rotation * x + translation))
}

/// One camera-frame point per masked pixel with a depth measurement, in
/// row-major pixel order.
pub fn backproject(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    mask: &BinaryMask,
) -> Result<PointCloud> {
    if depth.width != mask.width || depth.height != mask.height {
        return Err(Error::invalid(format!(
            "depth is {}x{} but mask is {}x{}",
            depth.width, depth.height, mask.width, mask.height
        )));
    }
    backproject_with(depth.width, depth.height, k, mask, |i| {
        let mm = depth.values[i];
        (mm > 0).then(|| mm as f64 / 1000.0)
    })
}

/// Same as [`backproject`] for unquantized metric depth (meters). Pixels with
/// non-positive or non-finite depth are skipped.
pub fn backproject_meters(
    width: u32,
    height: u32,
    meters: &[f64],
    k: &CameraIntrinsics,
    mask: &BinaryMask,
) -> Result<PointCloud> {
    if meters.len() != width as usize * height as usize
        || mask.width != width
        || mask.height != height
    {
        return Err(Error::invalid("depth and mask dimensions differ"));
    }
    backproject_with(width, height, k, mask, |i| {
        let z = meters[i];
        (z.is_finite() && z > 0.0).then_some(z)
    })
}

fn backproject_with(
    width: u32,
    height: u32,
    k: &CameraIntrinsics,
    mask: &BinaryMask,
    depth_at: impl Fn(usize) -> Option<f64>,
) -> Result<PointCloud> {
    let mut points = Vec::new();
    for v in 0..height {
        for u in 0..width {
            let i = (v * width + u) as usize;
            if !mask.values[i] {
                continue;
            }
            if let Some(z) = depth_at(i) {
                points.push(k.unproject(u as f64, v as f64, z));
            }
        }
    }
    PointCloud::new(points)
}

/// Indices drawn by [`sample_points`]: a uniform subset without replacement
/// when `len ≥ n`, otherwise `n` uniform draws with replacement.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::EmptyCloud);
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if len >= n {
        Ok(index::sample(&mut rng, len, n).into_vec())
    } else {
        Ok((0..n).map(|_| rng.random_range(0..len)).collect())
    }
}

/// Resamples a cloud to exactly `n` points, deterministically for `seed`.
pub fn sample_points(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    let idx = sample_indices(cloud.len(), n, seed)?;
    Ok(PointCloud {
        points: idx.into_iter().map(|i| cloud.points[i]).collect(),
    })
}

/// Nearest rotation to `m` in Frobenius norm.
pub fn orthonormalize(m: &Mat3) -> Result<Mat3> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("matrix must be finite"));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = svd.singular_values;
    let (smax, smin) = (s.max(), s.min());
    if !(smin > 1e-12 * smax) {
        return Err(Error::invalid("matrix is singular"));
    }
    let d = (u * v_t).determinant().signum();
    Ok(u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t)
}

/// Ray-casts an oriented box into a metric depth buffer (meters, row-major,
/// `f64::INFINITY` where the ray misses).
pub fn render_box_depth(k: &CameraIntrinsics, pose: &Pose9DoF) -> Vec<f64> {
    let rt = pose.rotation.transpose();
    let origin = -(rt * pose.translation);
    let half = pose.size / 2.0;
    let mut out = Vec::with_capacity(k.width as usize * k.height as usize);
    for v in 0..k.height {
        for u in 0..k.width {
            // z-component of the ray is 1, so the ray parameter is the depth.
            let ray = Vec3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
            let dir = rt * ray;
            let (mut near, mut far) = (f64::NEG_INFINITY, f64::INFINITY);
            for a in 0..3 {
                if dir[a] == 0.0 {
                    if origin[a].abs() > half[a] {
                        far = f64::NEG_INFINITY;
                    }
                    continue;
                }
                let t1 = (-half[a] - origin[a]) / dir[a];
                let t2 = (half[a] - origin[a]) / dir[a];
                near = near.max(t1.min(t2));
                far = far.min(t1.max(t2));
            }
            out.push(if near <= far && near > MIN_DEPTH {
                near
            } else {
                f64::INFINITY
            });
        }
    }
    out
}
