mod common;

use std::path::PathBuf;

use catpose::eval::{
    evaluate, evaluate_with, frame_metrics, generate_synthetic_scene, load_records, parse_records,
    render_report, write_records, EvalConfig, FrameRecord, ReportFormat, SynthNoise, SynthParams,
};
use catpose::geometry::axis_angle;
use catpose::image_io::{read_depth_png, read_mask_png};
use catpose::mesh::TriangleMesh;
use catpose::metrics::pose_error;
use catpose::{Error, Pose9DoF, SymmetryClass, Vec3};
use common::random_rotation;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scene(seed: u64, noise: SynthNoise, frames: usize) -> catpose::eval::SyntheticScene {
    generate_synthetic_scene(
        &EvalConfig::default(),
        &SynthParams {
            seed,
            noise,
            frames_per_category: frames,
            ..SynthParams::default()
        },
    )
    .unwrap()
}

fn noise(deg: f64, cm: f64, pct: f64) -> SynthNoise {
    SynthNoise {
        rotation_deg: deg,
        translation_cm: cm,
        scale_pct: pct,
    }
}

#[test]
fn records_round_trip() {
    let cfg = EvalConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let records: Vec<FrameRecord> = (0..1000)
        .map(|i| {
            let pose = Pose9DoF::new(
                random_rotation(&mut rng),
                Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0)),
                Vec3::from_fn(|_, _| rng.random_range(0.01..1.0)),
            )
            .unwrap();
            let cat = &cfg.categories[i % cfg.categories.len()];
            FrameRecord::from_pose(format!("f{i}"), cat, &pose)
        })
        .collect();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    let back = parse_records(std::str::from_utf8(&buf).unwrap(), &cfg).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.frame_id, b.frame_id);
        assert_eq!(a.category, b.category);
        for (x, y) in a
            .rotation
            .iter()
            .chain(&a.translation)
            .chain(&a.size)
            .zip(b.rotation.iter().chain(&b.translation).chain(&b.size))
        {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn load_errors_carry_line_and_field() {
    let cfg = EvalConfig::default();
    assert!(parse_records("", &cfg).unwrap().is_empty());
    let good = r#"{"frame_id":"a","category":"mug","rotation":[1,0,0,0,1,0,0,0,1],"translation":[0,0,1],"size":[0.1,0.1,0.1]}"#;
    let skewed = good.replace("[1,0,0,0,1,0,0,0,1]", "[1,0.01,0,0,1,0,0,0,1]");
    match parse_records(&format!("{good}\n{skewed}\n"), &cfg) {
        Err(Error::Validation { line, field, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(field, "rotation");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    match parse_records(&format!("{good}\n\n{{not json\n"), &cfg) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let stranger = good.replace("mug", "teapot");
    assert!(matches!(
        parse_records(&stranger, &cfg),
        Err(Error::Validation { .. })
    ));
    let missing = load_records("/nonexistent/records.jsonl", &cfg).unwrap_err();
    assert!(missing.is_io());
}

#[test]
fn unmatched_records_are_listed() {
    let s = scene(2, SynthNoise::default(), 2);
    let cfg = EvalConfig::default();
    let err = evaluate(&s.preds[1..], &s.gts, &cfg).unwrap_err();
    match err {
        Error::Matching(msg) => assert!(msg.contains(&s.gts[0].frame_id)),
        other => panic!("expected a matching error, got {other:?}"),
    }
    let mut dup = s.preds.clone();
    dup.push(s.preds[0].clone());
    assert!(matches!(
        evaluate(&dup, &s.gts, &cfg),
        Err(Error::Matching(_))
    ));
}

#[test]
fn evaluation_ignores_record_order() {
    let s = scene(3, noise(6.0, 3.0, 10.0), 6);
    let cfg = EvalConfig::default();
    let base = evaluate(&s.preds, &s.gts, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let mut p = s.preds.clone();
        let mut g = s.gts.clone();
        p.shuffle(&mut rng);
        g.shuffle(&mut rng);
        assert_eq!(evaluate(&p, &g, &cfg).unwrap(), base);
    }
}

#[test]
fn worker_count_does_not_change_the_report() {
    let s = scene(5, noise(4.0, 2.0, 5.0), 8);
    let cfg = EvalConfig::default();
    let one = evaluate_with(&s.preds, &s.gts, &cfg, 1, false).unwrap();
    let four = evaluate_with(&s.preds, &s.gts, &cfg, 4, false).unwrap();
    assert_eq!(
        render_report(&one, ReportFormat::Json, 1),
        render_report(&four, ReportFormat::Json, 1)
    );
    let timed = evaluate_with(&s.preds, &s.gts, &cfg, 2, true).unwrap();
    assert!(timed.throughput_fps.unwrap() > 0.0);
}

#[test]
fn csv_and_json_agree() {
    let s = scene(6, noise(7.0, 4.0, 15.0), 7);
    let report = evaluate(&s.preds, &s.gts, &EvalConfig::default()).unwrap();
    let csv = render_report(&report, ReportFormat::Csv, 1);
    let json: serde_json::Value =
        serde_json::from_str(&render_report(&report, ReportFormat::Json, 1)).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), rows.len());
    for (line, row) in lines.iter().zip(rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], row["category"].as_str().unwrap());
        for (c, v) in cols[2..].iter().zip(row["values"].as_array().unwrap()) {
            let c: f64 = c.parse().unwrap();
            assert!((c - v.as_f64().unwrap()).abs() < 1e-12);
        }
    }
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Set `CATPOSE_BLESS=1` to regenerate the frozen files.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("CATPOSE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from the frozen copy");
}

#[test]
fn golden_reports() {
    let s = scene(2024, noise(6.0, 3.0, 8.0), 5);
    let report = evaluate(&s.preds, &s.gts, &EvalConfig::default()).unwrap();
    check_golden("report.txt", &render_report(&report, ReportFormat::Text, 1));
    check_golden("report.csv", &render_report(&report, ReportFormat::Csv, 1));
}

#[test]
fn zero_noise_predictions_equal_ground_truth() {
    let s = scene(7, SynthNoise::default(), 3);
    for (p, g) in s.preds.iter().zip(&s.gts) {
        for (x, y) in p
            .rotation
            .iter()
            .chain(&p.translation)
            .chain(&p.size)
            .zip(g.rotation.iter().chain(&g.translation).chain(&g.size))
        {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn constructed_noise_is_exact() {
    let cfg = EvalConfig::default();
    let s = scene(8, noise(7.0, 3.0, 0.0), 10);
    for (p, g) in s.preds.iter().zip(&s.gts) {
        let sym = cfg.symmetry_of(&g.category);
        let e = pose_error(&p.pose().unwrap(), &g.pose().unwrap(), sym);
        assert!(
            (e.rotation_deg - 7.0).abs() <= 1e-6,
            "{}: {}",
            g.frame_id,
            e.rotation_deg
        );
        assert!((e.translation_cm - 3.0).abs() <= 1e-9);
        let m = frame_metrics(p, g, &cfg).unwrap();
        assert_eq!(m.error, e);
    }
}

#[test]
fn scene_files_round_trip() {
    let s = scene(9, noise(2.0, 1.0, 0.0), 1);
    let dir = tempfile::tempdir().unwrap();
    s.write(dir.path()).unwrap();
    let cfg = EvalConfig::default();
    assert_eq!(
        load_records(dir.path().join("gt.jsonl"), &cfg)
            .unwrap()
            .len(),
        s.gts.len()
    );
    for f in &s.frames {
        let depth =
            read_depth_png(dir.path().join("depth").join(format!("{}.png", f.frame_id))).unwrap();
        assert_eq!(depth, f.depth);
        let mask =
            read_mask_png(dir.path().join("mask").join(format!("{}.png", f.frame_id))).unwrap();
        assert_eq!(mask, f.mask);
        assert!(mask.count() > 0);
        let mesh =
            TriangleMesh::load_obj(dir.path().join("mesh").join(format!("{}.obj", f.frame_id)))
                .unwrap();
        assert_eq!(mesh, f.mesh);
    }
}

#[test]
fn config_file_controls_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"categories": ["mug", "bowl"], "symmetry": {"bowl": {"kind": "discrete_axis", "axis": [0, 1, 0], "order": 4}}, "rounding": 2}"#,
    )
    .unwrap();
    let cfg = EvalConfig::load(&path).unwrap();
    assert_eq!(cfg.symmetry_of("mug"), &SymmetryClass::None);
    assert_eq!(
        cfg.symmetry_of("bowl"),
        &SymmetryClass::discrete(Vec3::y(), 4).unwrap()
    );
    std::fs::write(&path, r#"{"iou_thresholds": [0.5, 0.25]}"#).unwrap();
    assert!(EvalConfig::load(&path).is_err());
    std::fs::write(&path, r#"{"colour": "red"}"#).unwrap();
    assert!(EvalConfig::load(&path).is_err());
}

#[test]
fn a_quarter_turn_breaks_only_asymmetric_categories() {
    let cfg = EvalConfig::default();
    let s = scene(10, SynthNoise::default(), 4);
    let preds: Vec<FrameRecord> = s
        .gts
        .iter()
        .map(|g| {
            let mut pose = g.pose().unwrap();
            pose.rotation *= axis_angle(&Vec3::y(), std::f64::consts::FRAC_PI_2);
            FrameRecord::from_pose(&g.frame_id, &g.category, &pose)
        })
        .collect();
    let report = evaluate(&preds, &s.gts, &cfg).unwrap();
    for row in &report.categories {
        let symmetric = cfg.symmetry_of(&row.category) != &SymmetryClass::None;
        let expected = if symmetric { 100.0 } else { 0.0 };
        assert_eq!(row.pose[3], expected, "{}", row.category);
    }
}
