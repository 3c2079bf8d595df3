use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{EvalConfig, FrameRecord};
use crate::error::{Error, Result};
use crate::metrics::{
    iou_accuracy, pose_error, symmetric_box_iou, threshold_accuracy, CategoryMetrics, MetricReport,
    OrientedBox3D, PoseError,
};

/// Metrics of one matched prediction / ground-truth pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame_id: String,
    pub category: String,
    pub iou: f64,
    pub error: PoseError,
}

type Key = (String, String);

fn index(records: &[FrameRecord], what: &str) -> Result<BTreeMap<Key, FrameRecord>> {
    let mut map = BTreeMap::new();
    let mut dups = Vec::new();
    for r in records {
        let key = (r.frame_id.clone(), r.category.clone());
        if map.insert(key, r.clone()).is_some() {
            dups.push(format!("{}/{}", r.frame_id, r.category));
        }
    }
    if !dups.is_empty() {
        return Err(Error::Matching(format!(
            "duplicate {what} records: {}",
            dups.join(", ")
        )));
    }
    Ok(map)
}

/// Metrics of a single pair.
pub fn frame_metrics(
    pred: &FrameRecord,
    gt: &FrameRecord,
    cfg: &EvalConfig,
) -> Result<FrameMetrics> {
    let (p, g) = (pred.pose()?, gt.pose()?);
    let sym = cfg.symmetry_of(&gt.category);
    let iou = symmetric_box_iou(
        &OrientedBox3D::new(p.clone()),
        &OrientedBox3D::new(g.clone()),
        sym,
        cfg.symmetry_steps,
    );
    Ok(FrameMetrics {
        frame_id: gt.frame_id.clone(),
        category: gt.category.clone(),
        iou,
        error: pose_error(&p, &g, sym),
    })
}

/// Matches predictions to ground truth by `(frame_id, category)` and scores
/// every pair, sequentially.
pub fn evaluate(
    preds: &[FrameRecord],
    gts: &[FrameRecord],
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    evaluate_with(preds, gts, cfg, 1, false)
}

/// [`evaluate`] on `workers` threads. Pairs are scored in key order and
/// aggregated sequentially, so the report does not depend on `workers`.
/// With `timed`, the report carries the frames/s of the metric computation.
pub fn evaluate_with(
    preds: &[FrameRecord],
    gts: &[FrameRecord],
    cfg: &EvalConfig,
    workers: usize,
    timed: bool,
) -> Result<MetricReport> {
    cfg.validate()?;
    let pred_map = index(preds, "prediction")?;
    let gt_map = index(gts, "ground-truth")?;
    let show = |k: &Key| format!("{}/{}", k.0, k.1);
    let unmatched_pred: Vec<String> = pred_map
        .keys()
        .filter(|k| !gt_map.contains_key(*k))
        .map(show)
        .collect();
    let unmatched_gt: Vec<String> = gt_map
        .keys()
        .filter(|k| !pred_map.contains_key(*k))
        .map(show)
        .collect();
    if !unmatched_pred.is_empty() || !unmatched_gt.is_empty() {
        return Err(Error::Matching(format!(
            "predictions without ground truth: [{}]; ground truth without predictions: [{}]",
            unmatched_pred.join(", "),
            unmatched_gt.join(", ")
        )));
    }
    if gt_map.is_empty() {
        return Err(Error::invalid("no frames to evaluate"));
    }
    let pairs: Vec<(&FrameRecord, &FrameRecord)> =
        gt_map.iter().map(|(k, g)| (&pred_map[k], g)).collect();

    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let scored: Vec<FrameMetrics> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(p, g)| frame_metrics(p, g, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    for category in &cfg.categories {
        let frames: Vec<&FrameMetrics> =
            scored.iter().filter(|m| &m.category == category).collect();
        if frames.is_empty() {
            continue;
        }
        let ious: Vec<f64> = frames.iter().map(|m| m.iou).collect();
        let errors: Vec<PoseError> = frames.iter().map(|m| m.error).collect();
        rows.push(CategoryMetrics {
            category: category.clone(),
            frames: frames.len(),
            iou: iou_accuracy(&ious, &cfg.iou_thresholds)?,
            pose: threshold_accuracy(&errors, &cfg.pose_thresholds)?,
        });
    }
    let mut report = MetricReport::new(
        cfg.iou_thresholds.clone(),
        cfg.pose_thresholds.clone(),
        rows,
    )?;
    if timed {
        report.throughput_fps = Some(scored.len() as f64 / elapsed.max(f64::MIN_POSITIVE));
    }
    Ok(report)
}
