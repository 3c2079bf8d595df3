//! Pose from the 8 projected cuboid corners predicted by a monocular head.
//!
//! The detector predicts pixel positions of the 8 corners (canonical order of
//! [`cuboid_corners`](crate::geometry::cuboid_corners)) and the box's relative
//! dimensions. The model points are the corners of a box with those relative
//! dimensions, so the recovered translation lives in the same unit-cuboid
//! scale: scaling the box and the translation together leaves the image
//! unchanged, and absolute metric translation and size need depth.
//!
//! Solve: DLT on the 8 correspondences in normalized image coordinates,
//! rotation block projected onto SO(3), then Gauss–Newton on the pixel
//! reprojection error with step halving.

use nalgebra::{DMatrix, Matrix3, Matrix6, SMatrix, Vector2, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{
    axis_angle, check_size, cuboid_corners_unchecked, orthonormalize, CameraIntrinsics, MIN_DEPTH,
};
use crate::{Mat3, Vec3};

/// Pixel positions of the 8 cuboid corners, canonical corner order.
#[derive(Debug, Clone, PartialEq)]
pub struct CuboidKeypoints2D {
    pub points: [Vector2<f64>; 8],
}

impl CuboidKeypoints2D {
    pub fn new(points: [Vector2<f64>; 8]) -> Result<Self> {
        if !points.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::invalid("keypoints must be finite"));
        }
        Ok(Self { points })
    }

    /// Projects the corners of `dims` under `(rotation, translation)`.
    pub fn project(
        k: &CameraIntrinsics,
        rotation: &Mat3,
        translation: &Vec3,
        dims: &RelativeDims,
    ) -> Result<Self> {
        let corners = cuboid_corners_unchecked(&dims.0);
        let mut points = [Vector2::zeros(); 8];
        for (p, c) in points.iter_mut().zip(&corners) {
            let (u, v) = k.project(&(rotation * c + translation))?;
            *p = Vector2::new(u, v);
        }
        Ok(Self { points })
    }
}

/// Box extents normalized so the largest component is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeDims(Vec3);

impl RelativeDims {
    /// Normalizes positive extents by their maximum.
    pub fn new(raw: Vec3) -> Result<Self> {
        check_size(&raw)?;
        Ok(Self(raw / raw.max()))
    }

    pub fn as_vec(&self) -> Vec3 {
        self.0
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpConfig {
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PnpConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnpSolution {
    pub rotation: Mat3,
    /// Translation in unit-cuboid scale (largest box side = 1).
    pub translation_dir: Vec3,
    /// Root-mean-square corner reprojection error, pixels.
    pub rmse: f64,
    /// Accepted Gauss–Newton steps.
    pub iterations: usize,
    /// Sum of squared residuals at the initial estimate and after every
    /// accepted step.
    pub cost_history: Vec<f64>,
}

/// Recovers rotation and unit-scale translation from the corner keypoints.
pub fn pnp_recover(
    kps: &CuboidKeypoints2D,
    dims: &RelativeDims,
    k: &CameraIntrinsics,
    cfg: &PnpConfig,
) -> Result<PnpSolution> {
    let model = cuboid_corners_unchecked(&dims.0);
    check_spread(kps)?;
    let (r0, t0) = dlt_init(&model, kps, k)?;
    let (rotation, translation, cost_history) = refine(&model, kps, k, r0, t0, cfg)?;
    for c in &model {
        let z = (rotation * c + translation).z;
        if !(z > MIN_DEPTH) {
            return Err(Error::BehindCamera { z });
        }
    }
    let cost = *cost_history.last().unwrap();
    Ok(PnpSolution {
        rotation,
        translation_dir: translation,
        rmse: (cost / 8.0).sqrt(),
        iterations: cost_history.len() - 1,
        cost_history,
    })
}

/// RMS pixel distance between the keypoints and the corners reprojected
/// under `sol`.
pub fn reprojection_rmse(
    sol: &PnpSolution,
    kps: &CuboidKeypoints2D,
    dims: &RelativeDims,
    k: &CameraIntrinsics,
) -> Result<f64> {
    let model = cuboid_corners_unchecked(&dims.0);
    let cost = cost(&model, kps, k, &sol.rotation, &sol.translation_dir)
        .ok_or_else(|| behind(&model, &sol.rotation, &sol.translation_dir))?;
    Ok((cost / 8.0).sqrt())
}

fn behind(model: &[Vec3; 8], r: &Mat3, t: &Vec3) -> Error {
    let z = model
        .iter()
        .map(|c| (r * c + t).z)
        .fold(f64::INFINITY, f64::min);
    Error::BehindCamera { z }
}

fn check_spread(kps: &CuboidKeypoints2D) -> Result<()> {
    let mean = kps.points.iter().sum::<Vector2<f64>>() / 8.0;
    let mut cov = nalgebra::Matrix2::zeros();
    for p in &kps.points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-12 * hi {
        return Err(Error::Degenerate("keypoints are collinear".into()));
    }
    Ok(())
}

fn dlt_init(
    model: &[Vec3; 8],
    kps: &CuboidKeypoints2D,
    k: &CameraIntrinsics,
) -> Result<(Mat3, Vec3)> {
    // Normalized image coordinates, then Hartley conditioning.
    let norm: Vec<Vector2<f64>> = kps
        .points
        .iter()
        .map(|p| Vector2::new((p.x - k.cx) / k.fx, (p.y - k.cy) / k.fy))
        .collect();
    let centroid = norm.iter().sum::<Vector2<f64>>() / 8.0;
    let spread = norm.iter().map(|p| (p - centroid).norm()).sum::<f64>() / 8.0;
    let scale = std::f64::consts::SQRT_2 / spread;
    let cond = Matrix3::new(
        scale,
        0.0,
        -scale * centroid.x,
        0.0,
        scale,
        -scale * centroid.y,
        0.0,
        0.0,
        1.0,
    );

    let mut a = DMatrix::<f64>::zeros(16, 12);
    for (i, (x, p)) in model.iter().zip(&norm).enumerate() {
        let q = (p - centroid) * scale;
        let xh = [x.x, x.y, x.z, 1.0];
        for j in 0..4 {
            a[(2 * i, j)] = xh[j];
            a[(2 * i, 8 + j)] = -q.x * xh[j];
            a[(2 * i + 1, 4 + j)] = xh[j];
            a[(2 * i + 1, 8 + j)] = -q.y * xh[j];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let smax = s[order[order.len() - 1]];
    if !(s[order[1]] > 1e-10 * smax) {
        return Err(Error::Degenerate(
            "correspondences do not determine a unique projection".into(),
        ));
    }
    let h = v_t.row(order[0]);
    let p_cond = SMatrix::<f64, 3, 4>::from_fn(|r, c| h[4 * r + c]);
    let inv = cond
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("conditioning failed".into()))?;
    let mut p = inv * p_cond;

    // Orient so the model sits in front of the camera.
    let depth_sum: f64 = model
        .iter()
        .map(|x| p[(2, 0)] * x.x + p[(2, 1)] * x.y + p[(2, 2)] * x.z + p[(2, 3)])
        .sum();
    if depth_sum < 0.0 {
        p = -p;
    }
    let m: Mat3 = p.fixed_view::<3, 3>(0, 0).into_owned();
    let sv = m.singular_values();
    let s_mean = sv.sum() / 3.0;
    if !(s_mean > 0.0) {
        return Err(Error::Degenerate("linear estimate is zero".into()));
    }
    let rotation = orthonormalize(&m)?;
    let translation = p.column(3) / s_mean;
    Ok((rotation, translation))
}

/// Sum of squared pixel residuals; `None` if any corner is behind the camera.
fn cost(
    model: &[Vec3; 8],
    kps: &CuboidKeypoints2D,
    k: &CameraIntrinsics,
    r: &Mat3,
    t: &Vec3,
) -> Option<f64> {
    let mut sum = 0.0;
    for (x, obs) in model.iter().zip(&kps.points) {
        let (u, v) = k.project(&(r * x + t)).ok()?;
        sum += (u - obs.x).powi(2) + (v - obs.y).powi(2);
    }
    Some(sum)
}

fn refine(
    model: &[Vec3; 8],
    kps: &CuboidKeypoints2D,
    k: &CameraIntrinsics,
    mut r: Mat3,
    mut t: Vec3,
    cfg: &PnpConfig,
) -> Result<(Mat3, Vec3, Vec<f64>)> {
    let mut current = cost(model, kps, k, &r, &t).ok_or_else(|| behind(model, &r, &t))?;
    let mut history = vec![current];

    for _ in 0..cfg.max_iters {
        if current == 0.0 {
            break;
        }
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for (x, obs) in model.iter().zip(&kps.points) {
            let rx = r * x;
            let p = rx + t;
            let iz = 1.0 / p.z;
            let res = [
                k.fx * p.x * iz + k.cx - obs.x,
                k.fy * p.y * iz + k.cy - obs.y,
            ];
            let du = Vec3::new(k.fx * iz, 0.0, -k.fx * p.x * iz * iz);
            let dv = Vec3::new(0.0, k.fy * iz, -k.fy * p.y * iz * iz);
            // dP/dω = −[Rx]ₓ for the left perturbation exp(ω)·R.
            let dp_dw = -rx.cross_matrix();
            for (d, r_i) in [du, dv].iter().zip(res) {
                let jw = dp_dw.transpose() * d;
                let row = Vector6::new(jw.x, jw.y, jw.z, d.x, d.y, d.z);
                jtj += row * row.transpose();
                jtr += row * r_i;
            }
        }
        let rhs = -jtr;
        let step = match jtj.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => match jtj.pseudo_inverse(1e-14) {
                Ok(pinv) => pinv * rhs,
                Err(_) => break,
            },
        };
        if !step.iter().all(|s| s.is_finite()) {
            break;
        }

        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..40 {
            let w = Vec3::new(step[0], step[1], step[2]) * alpha;
            let angle = w.norm();
            let r_new = if angle > 0.0 {
                axis_angle(&w, angle) * r
            } else {
                r
            };
            let t_new = t + Vec3::new(step[3], step[4], step[5]) * alpha;
            if let Some(c) = cost(model, kps, k, &r_new, &t_new) {
                if c <= current {
                    accepted = Some((r_new, t_new, c));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((r_new, t_new, c)) = accepted else {
            break;
        };
        let decrease = (current - c) / current;
        r = r_new;
        t = t_new;
        current = c;
        history.push(c);
        if decrease < cfg.tol {
            break;
        }
    }

    Ok((r, t, history))
}
