//! Object symmetry classes and their rotation sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::axis_angle;
use crate::{Mat3, Vec3};

/// Default discretization of continuous symmetries.
pub const DEFAULT_SYMMETRY_STEPS: usize = 64;

/// Object-frame rotations that leave an object's appearance unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetryClass {
    None,
    /// Any rotation about `axis` (bottles, cans, ...).
    ContinuousAxis {
        axis: [f64; 3],
    },
    /// Rotations by multiples of `2π / order` about `axis`.
    DiscreteAxis {
        axis: [f64; 3],
        order: usize,
    },
}

impl SymmetryClass {
    pub fn continuous(axis: Vec3) -> Result<Self> {
        let s = SymmetryClass::ContinuousAxis { axis: axis.into() };
        s.validate()?;
        Ok(s)
    }

    pub fn discrete(axis: Vec3, order: usize) -> Result<Self> {
        let s = SymmetryClass::DiscreteAxis {
            axis: axis.into(),
            order,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymmetryClass::None => Ok(()),
            SymmetryClass::ContinuousAxis { axis } => check_axis(axis),
            SymmetryClass::DiscreteAxis { axis, order } => {
                check_axis(axis)?;
                if *order < 2 {
                    return Err(Error::invalid(format!(
                        "discrete symmetry order must be at least 2, got {order}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn axis(&self) -> Option<Vec3> {
        match self {
            SymmetryClass::None => None,
            SymmetryClass::ContinuousAxis { axis } | SymmetryClass::DiscreteAxis { axis, .. } => {
                Some(Vec3::from(*axis))
            }
        }
    }

    /// The rotations `S` the symmetry-aware losses and metrics range over.
    ///
    /// `steps` uniform rotations about the axis for continuous symmetries, the
    /// cyclic group for discrete ones, and only the identity for `None`. The
    /// first element is always the identity.
    pub fn rotations(&self, steps: usize) -> Vec<Mat3> {
        let count = match self {
            SymmetryClass::None => 1,
            SymmetryClass::ContinuousAxis { .. } => steps.max(1),
            SymmetryClass::DiscreteAxis { order, .. } => *order,
        };
        let Some(axis) = self.axis() else {
            return vec![Mat3::identity()];
        };
        (0..count)
            .map(|k| {
                if k == 0 {
                    Mat3::identity()
                } else {
                    axis_angle(&axis, std::f64::consts::TAU * k as f64 / count as f64)
                }
            })
            .collect()
    }
}

fn check_axis(axis: &[f64; 3]) -> Result<()> {
    let n = Vec3::from(*axis).norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "symmetry axis must be unit length, got norm {n}"
        )));
    }
    Ok(())
}
