use std::path::PathBuf;
use std::process::ExitCode;

use catpose::eval::{
    evaluate_with, generate_synthetic_scene, load_records, render_report, EvalConfig, ReportFormat,
    SynthNoise, SynthParams,
};
use catpose::metrics::{box_iou_3d, symmetric_box_iou, OrientedBox3D};
use catpose::{orthonormalize, Error, Mat3, Pose9DoF, Vec3};
use clap::{Parser, Subcommand};

/// Category-level 9-DoF pose evaluation toolkit.
#[derive(Debug, Parser)]
#[command(name = "catpose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against ground truth and print the accuracy table.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// JSON file with EvalConfig fields; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report frames/s of the metric computation.
        #[arg(long)]
        time: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write a synthetic scene with exactly perturbed predictions.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise_deg: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_cm: f64,
        /// Size scaling error, percent.
        #[arg(long, default_value_t = 0.0)]
        noise_scale: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// IoU of a single box pair. Boxes are 15 comma-separated numbers:
    /// rotation (9, row-major), center (3, m), size (3, m).
    Iou {
        #[arg(long, allow_hyphen_values = true)]
        box_a: String,
        #[arg(long, allow_hyphen_values = true)]
        box_b: String,
        /// Use this category's symmetry from the config (box b is the
        /// ground truth).
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> catpose::Result<EvalConfig> {
    match path {
        Some(p) => EvalConfig::load(p),
        None => Ok(EvalConfig::default()),
    }
}

fn parse_box(text: &str) -> catpose::Result<OrientedBox3D> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("box value `{}`: {e}", s.trim())))
        })
        .collect::<catpose::Result<Vec<_>>>()?;
    if values.len() != 15 {
        return Err(Error::InvalidArgument(format!(
            "a box needs 15 values, got {}",
            values.len()
        )));
    }
    let r = orthonormalize(&Mat3::from_row_slice(&values[..9]))?;
    let pose = Pose9DoF::new(
        r,
        Vec3::from_column_slice(&values[9..12]),
        Vec3::from_column_slice(&values[12..15]),
    )?;
    Ok(OrientedBox3D::new(pose))
}

fn run(cmd: Command) -> catpose::Result<()> {
    match cmd {
        Command::Evaluate {
            pred,
            gt,
            config,
            format,
            out,
            time,
            workers,
        } => {
            let cfg = load_config(&config)?;
            let preds = load_records(&pred, &cfg)?;
            let gts = load_records(&gt, &cfg)?;
            let report = evaluate_with(&preds, &gts, &cfg, workers, time)?;
            let text = render_report(&report, format, cfg.rounding);
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Synth {
            seed,
            noise_deg,
            noise_cm,
            noise_scale,
            out,
            frames,
            config,
        } => {
            let cfg = load_config(&config)?;
            let params = SynthParams {
                seed,
                noise: SynthNoise {
                    rotation_deg: noise_deg,
                    translation_cm: noise_cm,
                    scale_pct: noise_scale,
                },
                frames_per_category: frames,
                ..SynthParams::default()
            };
            let scene = generate_synthetic_scene(&cfg, &params)?;
            scene.write(&out)?;
            println!("wrote {} frames to {}", scene.gts.len(), out.display());
        }
        Command::Iou {
            box_a,
            box_b,
            category,
            config,
        } => {
            let a = parse_box(&box_a)?;
            let b = parse_box(&box_b)?;
            let iou = match category {
                Some(cat) => {
                    let cfg = load_config(&config)?;
                    symmetric_box_iou(&a, &b, cfg.symmetry_of(&cat), cfg.symmetry_steps)
                }
                None => box_iou_3d(&a, &b),
            };
            println!("{iou}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
