use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracies (percent) of one category, or of the mean over categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: String,
    pub frames: usize,
    /// One value per IoU threshold.
    pub iou: Vec<f64>,
    /// One value per `(deg, cm)` threshold.
    pub pose: Vec<f64>,
}

/// Per-category and mean threshold accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub iou_thresholds: Vec<f64>,
    pub pose_thresholds: Vec<(f64, f64)>,
    pub categories: Vec<CategoryMetrics>,
    /// Unweighted mean over `categories`; `frames` is the total.
    pub mean: CategoryMetrics,
    /// Frames per second of the metric computation alone, when timed.
    pub throughput_fps: Option<f64>,
}

impl MetricReport {
    /// Builds the report, averaging the rows, and checks that every value is
    /// a percentage and that accuracy never drops as thresholds loosen.
    pub fn new(
        iou_thresholds: Vec<f64>,
        pose_thresholds: Vec<(f64, f64)>,
        categories: Vec<CategoryMetrics>,
    ) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::invalid("report needs at least one category"));
        }
        let mean_of = |values: &dyn Fn(&CategoryMetrics) -> &Vec<f64>, len: usize| {
            (0..len)
                .map(|i| {
                    categories.iter().map(|c| values(c)[i]).sum::<f64>() / categories.len() as f64
                })
                .collect::<Vec<_>>()
        };
        for c in &categories {
            if c.iou.len() != iou_thresholds.len() || c.pose.len() != pose_thresholds.len() {
                return Err(Error::invalid(format!(
                    "category `{}` has the wrong number of columns",
                    c.category
                )));
            }
        }
        let mean = CategoryMetrics {
            category: "mean".into(),
            frames: categories.iter().map(|c| c.frames).sum(),
            iou: mean_of(&|c| &c.iou, iou_thresholds.len()),
            pose: mean_of(&|c| &c.pose, pose_thresholds.len()),
        };
        let report = Self {
            iou_thresholds,
            pose_thresholds,
            categories,
            mean,
            throughput_fps: None,
        };
        report.check()?;
        Ok(report)
    }

    pub fn frames(&self) -> usize {
        self.mean.frames
    }

    pub fn rows(&self) -> impl Iterator<Item = &CategoryMetrics> {
        self.categories.iter().chain(std::iter::once(&self.mean))
    }

    fn check(&self) -> Result<()> {
        for row in self.rows() {
            if let Some(v) = row
                .iou
                .iter()
                .chain(&row.pose)
                .find(|v| !(0.0..=100.0).contains(*v))
            {
                return Err(Error::invalid(format!(
                    "`{}`: accuracy {v} outside [0, 100]",
                    row.category
                )));
            }
            for i in 0..self.iou_thresholds.len() {
                for j in 0..self.iou_thresholds.len() {
                    if self.iou_thresholds[i] <= self.iou_thresholds[j] && row.iou[i] < row.iou[j] {
                        return Err(monotonicity(&row.category));
                    }
                }
            }
            for i in 0..self.pose_thresholds.len() {
                for j in 0..self.pose_thresholds.len() {
                    let (a, b) = (self.pose_thresholds[i], self.pose_thresholds[j]);
                    if a.0 <= b.0 && a.1 <= b.1 && row.pose[i] > row.pose[j] {
                        return Err(monotonicity(&row.category));
                    }
                }
            }
        }
        Ok(())
    }
}

fn monotonicity(category: &str) -> Error {
    Error::invalid(format!(
        "`{category}`: accuracy decreases as a threshold loosens"
    ))
}
