use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_angle, vector_angle, Pose9DoF};
use crate::symmetry::SymmetryClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    /// In `[0, 180]`.
    pub rotation_deg: f64,
    pub translation_cm: f64,
}

/// Rotation and translation error of a prediction.
///
/// Rotation error is the geodesic angle without symmetry, the angle between
/// the mapped symmetry axes for a continuous symmetry, and the smallest
/// geodesic angle over the cyclic group for a discrete one.
pub fn pose_error(pred: &Pose9DoF, gt: &Pose9DoF, sym: &SymmetryClass) -> PoseError {
    let translation_cm = 100.0 * (pred.translation - gt.translation).norm();
    let rotation = match sym {
        SymmetryClass::None => geodesic_angle(&pred.rotation, &gt.rotation),
        SymmetryClass::ContinuousAxis { axis } => {
            let axis = crate::Vec3::from(*axis);
            vector_angle(&(pred.rotation * axis), &(gt.rotation * axis))
        }
        SymmetryClass::DiscreteAxis { .. } => sym
            .rotations(0)
            .iter()
            .map(|s| geodesic_angle(&pred.rotation, &(gt.rotation * s)))
            .fold(f64::INFINITY, f64::min),
    };
    PoseError {
        rotation_deg: rotation.to_degrees().clamp(0.0, 180.0),
        translation_cm,
    }
}

/// Percent of errors with `rotation ≤ deg` and `translation ≤ cm`, per
/// threshold pair.
pub fn threshold_accuracy(errors: &[PoseError], thresholds: &[(f64, f64)]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::invalid("no pose errors to score"));
    }
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&(deg, cm)| {
            let hits = errors
                .iter()
                .filter(|e| e.rotation_deg <= deg && e.translation_cm <= cm)
                .count();
            100.0 * hits as f64 / n
        })
        .collect())
}

/// Percent of IoU values at or above each threshold.
pub fn iou_accuracy(ious: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if ious.is_empty() {
        return Err(Error::invalid("no IoU values to score"));
    }
    if let Some(bad) = ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("IoU {bad} outside [0, 1]")));
    }
    let n = ious.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| 100.0 * ious.iter().filter(|&&v| v >= t).count() as f64 / n)
        .collect())
}
