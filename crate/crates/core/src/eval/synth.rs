//! Deterministic synthetic scenes: random cuboid objects, their depth
//! renders, ground-truth records and predictions perturbed by an exact
//! amount.

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{write_records, EvalConfig, FrameRecord};
use crate::error::{Error, Result};
use crate::geometry::{
    axis_angle, render_box_depth, BinaryMask, CameraIntrinsics, DepthImage, Pose9DoF,
};
use crate::image_io::{write_depth_png, write_mask_png};
use crate::mesh::TriangleMesh;
use crate::{Mat3, Vec3};

/// Exact perturbation applied to every prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynthNoise {
    /// Geodesic rotation error, degrees. The rotation axis is orthogonal to
    /// the category's symmetry axis, so symmetric categories see the same
    /// error.
    pub rotation_deg: f64,
    /// Translation error, centimeters, in a random direction.
    pub translation_cm: f64,
    /// Uniform size scaling, percent.
    pub scale_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub noise: SynthNoise,
    pub frames_per_category: usize,
    pub camera: CameraIntrinsics,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            noise: SynthNoise::default(),
            frames_per_category: 10,
            camera: CameraIntrinsics::real275(),
        }
    }
}

/// Rendered view of one ground-truth object.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub frame_id: String,
    pub depth: DepthImage,
    pub mask: BinaryMask,
    /// Object-frame cuboid mesh at ground-truth size.
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub camera: CameraIntrinsics,
    pub gts: Vec<FrameRecord>,
    pub preds: Vec<FrameRecord>,
    pub frames: Vec<SynthFrame>,
}

impl SyntheticScene {
    /// Unquantized metric depth of frame `i` (meters, `INFINITY` off-object).
    pub fn metric_depth(&self, i: usize) -> Result<Vec<f64>> {
        Ok(render_box_depth(&self.camera, &self.gts[i].pose()?))
    }

    /// Writes `gt.jsonl`, `pred.jsonl`, `camera.json` and per-frame
    /// `depth/<id>.png`, `mask/<id>.png`, `mesh/<id>.obj`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for sub in ["depth", "mask", "mesh"] {
            std::fs::create_dir_all(dir.join(sub))?;
        }
        write_records(std::fs::File::create(dir.join("gt.jsonl"))?, &self.gts)?;
        write_records(std::fs::File::create(dir.join("pred.jsonl"))?, &self.preds)?;
        let camera = serde_json::to_string_pretty(&self.camera)
            .map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(dir.join("camera.json"), camera + "\n")?;
        for f in &self.frames {
            write_depth_png(
                dir.join("depth").join(format!("{}.png", f.frame_id)),
                &f.depth,
            )?;
            write_mask_png(
                dir.join("mask").join(format!("{}.png", f.frame_id)),
                &f.mask,
            )?;
            std::fs::write(
                dir.join("mesh").join(format!("{}.obj", f.frame_id)),
                f.mesh.to_obj(),
            )?;
        }
        Ok(())
    }
}

/// Typical extents (m) per category; unknown categories get a 15 cm cube.
fn nominal_size(category: &str) -> Vec3 {
    match category {
        "bottle" => Vec3::new(0.08, 0.22, 0.08),
        "bowl" => Vec3::new(0.17, 0.08, 0.17),
        "camera" => Vec3::new(0.12, 0.10, 0.14),
        "can" => Vec3::new(0.07, 0.12, 0.07),
        "laptop" => Vec3::new(0.30, 0.20, 0.25),
        "mug" => Vec3::new(0.13, 0.10, 0.10),
        _ => Vec3::repeat(0.15),
    }
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .into_inner();
        }
    }
}

/// Builds `frames_per_category` objects per configured category.
pub fn generate_synthetic_scene(cfg: &EvalConfig, params: &SynthParams) -> Result<SyntheticScene> {
    cfg.validate()?;
    params.camera.validate()?;
    let noise = params.noise;
    if !(0.0..=180.0).contains(&noise.rotation_deg)
        || !(noise.translation_cm >= 0.0 && noise.translation_cm.is_finite())
        || !(noise.scale_pct >= 0.0 && noise.scale_pct.is_finite())
    {
        return Err(Error::invalid(format!(
            "noise levels must be non-negative (rotation at most 180°), got {noise:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut scene = SyntheticScene {
        camera: params.camera,
        gts: Vec::new(),
        preds: Vec::new(),
        frames: Vec::new(),
    };
    for category in &cfg.categories {
        let sym = cfg.symmetry_of(category);
        let base = nominal_size(category);
        for i in 0..params.frames_per_category {
            let frame_id = format!("{category}_{i:04}");
            let mut size = base.map(|s| s * rng.random_range(0.8..1.2));
            if sym.axis().is_some() {
                // Round cross-section around the vertical axis.
                size.z = size.x;
            }
            let gt = Pose9DoF::new(
                random_rotation(&mut rng),
                Vec3::new(
                    rng.random_range(-0.15..0.15),
                    rng.random_range(-0.15..0.15),
                    rng.random_range(0.6..1.2),
                ),
                size,
            )?;

            let spin_axis = match sym.axis() {
                Some(a) => {
                    let v = random_unit(&mut rng);
                    let ortho = v - a * a.dot(&v);
                    if ortho.norm() < 1e-6 {
                        a.cross(&Vec3::x()).normalize()
                    } else {
                        ortho.normalize()
                    }
                }
                None => random_unit(&mut rng),
            };
            let shift_dir = random_unit(&mut rng);
            let pred = Pose9DoF::new(
                gt.rotation * axis_angle(&spin_axis, noise.rotation_deg.to_radians()),
                gt.translation + shift_dir * (noise.translation_cm / 100.0),
                gt.size * (1.0 + noise.scale_pct / 100.0),
            )?;

            let metric = render_box_depth(&params.camera, &gt);
            let (w, h) = (params.camera.width, params.camera.height);
            let depth = DepthImage::from_meters(w, h, &metric)?;
            let mask = BinaryMask::new(w, h, metric.iter().map(|z| z.is_finite()).collect())?;
            scene.frames.push(SynthFrame {
                frame_id: frame_id.clone(),
                depth,
                mask,
                mesh: TriangleMesh::cuboid(&gt.size)?,
            });
            scene
                .gts
                .push(FrameRecord::from_pose(&frame_id, category, &gt));
            scene
                .preds
                .push(FrameRecord::from_pose(&frame_id, category, &pred));
        }
    }
    Ok(scene)
}
