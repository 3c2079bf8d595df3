//! REAL275-style evaluation metrics.

mod iou;
mod pose;
mod report;

pub use iou::{box_iou_3d, intersection_volume, symmetric_box_iou, OrientedBox3D};
pub use pose::{iou_accuracy, pose_error, threshold_accuracy, PoseError};
pub use report::{CategoryMetrics, MetricReport};

/// IoU thresholds of the 3D₂₅ / 3D₅₀ / 3D₇₅ columns.
pub const IOU_THRESHOLDS: [f64; 3] = [0.25, 0.5, 0.75];

/// `(degrees, centimeters)` thresholds of the pose-accuracy columns.
pub const POSE_THRESHOLDS: [(f64, f64); 4] = [(5.0, 2.0), (5.0, 5.0), (10.0, 5.0), (10.0, 10.0)];
