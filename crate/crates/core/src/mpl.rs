//! Mesh-point loss: mean squared distance between predicted mesh points and
//! ground-truth mesh samples rotated into the camera frame.

use crate::error::{Error, Result};
use crate::geometry::check_rotation;
use crate::symmetry::{SymmetryClass, DEFAULT_SYMMETRY_STEPS};
use crate::{Mat3, Vec3};

/// Weight of the mesh-point term in the total loss.
pub const DEFAULT_LAMBDA_MPL: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub lambda_mpl: f64,
    /// Rotations sampled around a continuous symmetry axis.
    pub symmetry_steps: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_mpl: DEFAULT_LAMBDA_MPL,
            symmetry_steps: DEFAULT_SYMMETRY_STEPS,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_mpl >= 0.0 && self.lambda_mpl.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda_mpl must be a non-negative number, got {}",
                self.lambda_mpl
            )));
        }
        if self.symmetry_steps == 0 {
            return Err(Error::invalid("symmetry_steps must be at least 1"));
        }
        Ok(())
    }
}

fn check_inputs(gt: &[Vec3], pred: &[Vec3], r: &Mat3) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(Error::invalid(format!(
            "{} ground-truth vertices but {} predictions",
            gt.len(),
            pred.len()
        )));
    }
    if gt.is_empty() {
        return Err(Error::invalid("vertex sets are empty"));
    }
    check_rotation(r)
}

fn loss_unchecked(gt: &[Vec3], pred: &[Vec3], r: &Mat3) -> f64 {
    let sum: f64 = gt
        .iter()
        .zip(pred)
        .map(|(g, p)| (r * g - p).norm_squared())
        .sum();
    sum / gt.len() as f64
}

/// `(1/V) Σᵢ ‖R·gtᵢ − predᵢ‖²` in m², summed in index order.
pub fn mpl_loss(gt: &[Vec3], pred: &[Vec3], r_gt: &Mat3) -> Result<f64> {
    check_inputs(gt, pred, r_gt)?;
    Ok(loss_unchecked(gt, pred, r_gt))
}

/// Gradient of [`mpl_loss`] with respect to each predicted vertex:
/// `(2/V)(predᵢ − R·gtᵢ)`.
pub fn mpl_gradient(gt: &[Vec3], pred: &[Vec3], r_gt: &Mat3) -> Result<Vec<Vec3>> {
    check_inputs(gt, pred, r_gt)?;
    let scale = 2.0 / gt.len() as f64;
    Ok(gt
        .iter()
        .zip(pred)
        .map(|(g, p)| (p - r_gt * g) * scale)
        .collect())
}

/// Minimum of [`mpl_loss`] over `R·S` for every symmetry rotation `S`
/// (see [`SymmetryClass::rotations`]).
pub fn symmetric_mpl_loss(
    gt: &[Vec3],
    pred: &[Vec3],
    r_gt: &Mat3,
    sym: &SymmetryClass,
    cfg: &LossConfig,
) -> Result<f64> {
    if *sym == SymmetryClass::None {
        return mpl_loss(gt, pred, r_gt);
    }
    check_inputs(gt, pred, r_gt)?;
    sym.validate()?;
    cfg.validate()?;
    Ok(sym
        .rotations(cfg.symmetry_steps)
        .iter()
        .map(|s| loss_unchecked(gt, pred, &(r_gt * s)))
        .fold(f64::INFINITY, f64::min))
}

/// `l_base + λ·l_mpl`.
pub fn total_loss(l_base: f64, l_mpl: f64, cfg: &LossConfig) -> Result<f64> {
    for (name, v) in [("l_base", l_base), ("l_mpl", l_mpl)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::invalid(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    cfg.validate()?;
    Ok(l_base + cfg.lambda_mpl * l_mpl)
}
