//! File-driven evaluation: JSON-lines records, matching and aggregation,
//! report rendering, and synthetic scenes for end-to-end checks.

mod config;
mod evaluate;
mod records;
mod render;
mod synth;

pub use config::EvalConfig;
pub use evaluate::{evaluate, evaluate_with, frame_metrics, FrameMetrics};
pub use records::{
    load_records, parse_records, write_records, FrameRecord, MAX_ROTATION_DEVIATION,
};
pub use render::{render_report, ReportFormat};
pub use synth::{generate_synthetic_scene, SynthFrame, SynthNoise, SynthParams, SyntheticScene};
