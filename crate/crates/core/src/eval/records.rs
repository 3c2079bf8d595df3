use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalConfig;
use crate::error::{Error, Result};
use crate::geometry::{orthonormalize, rotation_deviation, Pose9DoF};
use crate::{Mat3, Vec3};

/// Rotations further than this from orthonormal are rejected rather than
/// repaired.
pub const MAX_ROTATION_DEVIATION: f64 = 1e-3;

/// One object instance in one frame: a JSON object per line.
///
/// Frames with several instances of a category need distinct `frame_id`s
/// (e.g. `scene_1/0042#2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: String,
    pub category: String,
    /// Row-major 3×3.
    pub rotation: [f64; 9],
    /// Meters.
    pub translation: [f64; 3],
    /// Meters, full box extents.
    pub size: [f64; 3],
}

impl FrameRecord {
    pub fn from_pose(
        frame_id: impl Into<String>,
        category: impl Into<String>,
        pose: &Pose9DoF,
    ) -> Self {
        let r = &pose.rotation;
        Self {
            frame_id: frame_id.into(),
            category: category.into(),
            rotation: std::array::from_fn(|i| r[(i / 3, i % 3)]),
            translation: pose.translation.into(),
            size: pose.size.into(),
        }
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        Mat3::from_row_slice(&self.rotation)
    }

    pub fn pose(&self) -> Result<Pose9DoF> {
        Pose9DoF::new(
            self.rotation_matrix(),
            Vec3::from(self.translation),
            Vec3::from(self.size),
        )
    }

    /// Checks the record and snaps its rotation onto SO(3).
    pub fn validated(mut self, cfg: &EvalConfig, line: usize) -> Result<Self> {
        let fail = |field: &str, message: String| Error::Validation {
            line,
            field: field.into(),
            message,
        };
        if self.frame_id.is_empty() {
            return Err(fail("frame_id", "must not be empty".into()));
        }
        if !cfg.categories.contains(&self.category) {
            return Err(fail(
                "category",
                format!("`{}` is not a configured category", self.category),
            ));
        }
        let r = self.rotation_matrix();
        if !r.iter().all(|x| x.is_finite()) {
            return Err(fail("rotation", "must be finite".into()));
        }
        let dev = rotation_deviation(&r);
        if dev >= MAX_ROTATION_DEVIATION {
            return Err(fail(
                "rotation",
                format!("deviates from a rotation by {dev:e}"),
            ));
        }
        let r = orthonormalize(&r).map_err(|e| fail("rotation", e.to_string()))?;
        self.rotation = std::array::from_fn(|i| r[(i / 3, i % 3)]);
        if !self.translation.iter().all(|x| x.is_finite()) {
            return Err(fail("translation", "must be finite".into()));
        }
        if !self.size.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(fail("size", "components must be positive".into()));
        }
        Ok(self)
    }
}

/// Parses JSON-lines records; blank lines are skipped and line numbers are
/// 1-based.
pub fn parse_records(text: &str, cfg: &EvalConfig) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec.validated(cfg, i + 1)?);
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>, cfg: &EvalConfig) -> Result<Vec<FrameRecord>> {
    parse_records(&crate::error::read_text(path.as_ref())?, cfg)
}

pub fn write_records(mut w: impl Write, records: &[FrameRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}
