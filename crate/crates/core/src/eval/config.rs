use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{IOU_THRESHOLDS, POSE_THRESHOLDS};
use crate::symmetry::{SymmetryClass, DEFAULT_SYMMETRY_STEPS};
use crate::Vec3;

/// Evaluation settings. Every field is optional in the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub categories: Vec<String>,
    /// Symmetry class per category; categories not listed are asymmetric.
    pub symmetry: BTreeMap<String, SymmetryClass>,
    /// Ascending.
    pub iou_thresholds: Vec<f64>,
    /// `(degrees, centimeters)`, ascending.
    pub pose_thresholds: Vec<(f64, f64)>,
    /// Decimal places in the text table.
    pub rounding: usize,
    pub seed: u64,
    /// Rotations tried about a continuous symmetry axis for IoU.
    pub symmetry_steps: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let up = SymmetryClass::ContinuousAxis {
            axis: Vec3::y().into(),
        };
        Self {
            categories: ["bottle", "bowl", "camera", "can", "laptop", "mug"]
                .map(String::from)
                .to_vec(),
            symmetry: ["bottle", "bowl", "can"]
                .into_iter()
                .map(|c| (c.to_string(), up.clone()))
                .collect(),
            iou_thresholds: IOU_THRESHOLDS.to_vec(),
            pose_thresholds: POSE_THRESHOLDS.to_vec(),
            rounding: 1,
            seed: 0,
            symmetry_steps: DEFAULT_SYMMETRY_STEPS,
        }
    }
}

impl EvalConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = crate::error::read_text(path.as_ref())?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn symmetry_of(&self, category: &str) -> &SymmetryClass {
        self.symmetry.get(category).unwrap_or(&SymmetryClass::None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::invalid("category list is empty"));
        }
        for (i, c) in self.categories.iter().enumerate() {
            if c.is_empty() || self.categories[..i].contains(c) {
                return Err(Error::invalid(format!("bad or duplicate category `{c}`")));
            }
        }
        for (c, sym) in &self.symmetry {
            if !self.categories.contains(c) {
                return Err(Error::invalid(format!(
                    "symmetry given for unknown category `{c}`"
                )));
            }
            sym.validate()?;
        }
        let iou_ok = self.iou_thresholds.iter().all(|t| *t > 0.0 && *t <= 1.0)
            && self.iou_thresholds.windows(2).all(|w| w[0] < w[1]);
        if self.iou_thresholds.is_empty() || !iou_ok {
            return Err(Error::invalid(
                "IoU thresholds must be ascending values in (0, 1]",
            ));
        }
        let pose_ok = self
            .pose_thresholds
            .iter()
            .all(|(d, c)| *d > 0.0 && *c > 0.0 && d.is_finite() && c.is_finite())
            && self.pose_thresholds.windows(2).all(|w| w[0] < w[1]);
        if self.pose_thresholds.is_empty() || !pose_ok {
            return Err(Error::invalid(
                "pose thresholds must be positive and ascending (degrees, then cm)",
            ));
        }
        if self.symmetry_steps == 0 {
            return Err(Error::invalid("symmetry_steps must be at least 1"));
        }
        Ok(())
    }
}
