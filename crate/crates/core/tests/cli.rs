mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::write_synthetic_dataset;
use lingdepth::io::container::write_text_bank;
use lingdepth::io::depth_file::read_depth_map;
use lingdepth::io::report::read_report;
use lingdepth::TextBank;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lingdepth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn predict_eval_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_synthetic_dataset(dir.path(), 4, 21, &["bathroom", "classroom"]);
    let feat = ds.dir.join("features/img_0000.dce");
    let pred = ds.dir.join("single.dpm");
    ok(&[
        "predict",
        "--features", s(&feat),
        "--text", s(&ds.text_path),
        "--bins", "original",
        "--out-size", "20x30",
        "--out", s(&pred),
    ]);
    let dm = read_depth_map(&pred).unwrap();
    assert_eq!(dm.shape(), (20, 30));
    assert!(dm.data().iter().all(|&d| (1.0..=3.0).contains(&d)));

    let pgm = ds.dir.join("single.pgm");
    ok(&["export-pgm", "--in", s(&pred), "--max-depth", "10", "--out", s(&pgm)]);
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5\n30 20\n65535\n"));

    let pred_dir = ds.dir.join("preds");
    ok(&[
        "predict-all",
        "--manifest", s(&ds.manifest_path),
        "--text", s(&ds.text_path),
        "--out-dir", s(&pred_dir),
    ]);
    let report = ds.dir.join("eval.txt");
    ok(&["eval", "--manifest", s(&ds.manifest_path), "--pred-dir", s(&pred_dir), "--report", s(&report)]);
    let rows = read_report(&report).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].0, "eval");
    assert_eq!(rows[0].1.n_images, 4);

    let pooled = ds.dir.join("pooled.txt");
    ok(&[
        "eval", "--manifest", s(&ds.manifest_path), "--pred-dir", s(&pred_dir),
        "--agg", "pooled", "--report", s(&pooled),
    ]);
    assert_eq!(read_report(&pooled).unwrap()[0].1.n_pixels, rows[0].1.n_pixels);
}

#[test]
fn sweeps_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_synthetic_dataset(dir.path(), 6, 8, &["bathroom", "classroom", "kitchen"]);

    let bins_report = ds.dir.join("bins.txt");
    ok(&[
        "ablate-bins", "--manifest", s(&ds.manifest_path), "--text", s(&ds.text_path),
        "--class", "bathroom", "--report", s(&bins_report),
    ]);
    let rows = read_report(&bins_report).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(
        names,
        ["original", "class-dependent-1", "class-dependent-2", "class-dependent-3", "class-dependent-4"]
    );
    assert!(rows.iter().all(|r| r.1.n_images == 2));

    let parts = ds.dir.join("parts.json");
    std::fs::write(
        &parts,
        r#"{"partitions": [{"name": "narrow", "bins": [1,1.1,1.2,1.3,1.4,1.5,1.6]}, {"name": "wide", "bins": [0.5,1,2,3,4,5,6]}]}"#,
    )
    .unwrap();
    let custom = ds.dir.join("custom.txt");
    ok(&[
        "ablate-bins", "--manifest", s(&ds.manifest_path), "--text", s(&ds.text_path),
        "--partitions", s(&parts), "--report", s(&custom),
    ]);
    assert_eq!(read_report(&custom).unwrap().len(), 2);

    // Prompt sweep: two designs with their own banks.
    let text_dir = ds.dir.join("prompts");
    std::fs::create_dir_all(&text_dir).unwrap();
    write_text_bank(text_dir.join("original.dce"), &ds.text_bank).unwrap();
    let other_tokens: Vec<String> = lingdepth::presets::PROMPT_DESIGNS[1].1.iter().map(|t| t.to_string()).collect();
    let flipped: Vec<f32> = ds.text_bank.embeddings().iter().map(|v| -v).collect();
    let other = TextBank::new(other_tokens, lingdepth::presets::TEMPLATE, flipped, ds.text_bank.channels()).unwrap();
    write_text_bank(text_dir.join("prompt-1.dce"), &other).unwrap();
    let prompts_report = ds.dir.join("prompts.txt");
    ok(&[
        "ablate-prompts", "--manifest", s(&ds.manifest_path), "--text-dir", s(&text_dir),
        "--bins", "original", "--report", s(&prompts_report),
    ]);
    let rows = read_report(&prompts_report).unwrap();
    assert_eq!(rows.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(), ["original", "prompt-1"]);

    // Preset design list names banks that do not exist.
    let designs = ds.dir.join("designs.json");
    std::fs::write(&designs, serde_json::to_string(&lingdepth::presets::prompt_designs()).unwrap()).unwrap();
    let out = run(&[
        "ablate-prompts", "--manifest", s(&ds.manifest_path), "--text-dir", s(&text_dir),
        "--designs", s(&designs), "--report", s(&prompts_report),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prompt-2"));

    let base_a = ds.dir.join("base_a.txt");
    let base_b = ds.dir.join("base_b.txt");
    ok(&["baseline", "--manifest", s(&ds.manifest_path), "--seed", "42", "--report", s(&base_a)]);
    ok(&["baseline", "--manifest", s(&ds.manifest_path), "--seed", "42", "--report", s(&base_b)]);
    assert_eq!(std::fs::read(&base_a).unwrap(), std::fs::read(&base_b).unwrap());
    assert_eq!(read_report(&base_a).unwrap()[0].0, "lower-bound");

    let hist = ok(&["histogram", "--manifest", s(&ds.manifest_path), "--class", "kitchen"]);
    assert!(hist.starts_with("class kitchen:"));
}

#[test]
fn inspect_prints_every_token() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_synthetic_dataset(dir.path(), 1, 4, &["bathroom"]);
    let feat = ds.dir.join("features/img_0000.dce");
    let table = ok(&["inspect", "--features", s(&feat), "--text", s(&ds.text_path), "--patch", "1,1"]);
    for token in lingdepth::presets::TOKENS {
        assert!(table.contains(token), "{token} missing from\n{table}");
    }
    let json = ok(&["inspect", "--features", s(&feat), "--text", s(&ds.text_path), "--patch", "0,0", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["responses"].as_array().unwrap().len(), 7);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_synthetic_dataset(dir.path(), 2, 1, &["bathroom"]);
    let feat = ds.dir.join("features/img_0000.dce");
    let out_path = ds.dir.join("x.dpm");

    // Input format: corrupted magic.
    let bad = ds.dir.join("bad.dce");
    let mut bytes = std::fs::read(&feat).unwrap();
    bytes[0] = b'Z';
    std::fs::write(&bad, bytes).unwrap();
    let out = run(&["predict", "--features", s(&bad), "--text", s(&ds.text_path), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));

    // Validation: 6 bins for 7 tokens.
    let six = ds.dir.join("six.json");
    std::fs::write(&six, r#"{"name": "six", "bins": [1,2,3,4,5,6]}"#).unwrap();
    let out = run(&[
        "predict", "--features", s(&feat), "--text", s(&ds.text_path), "--bins", s(&six), "--out", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Validation: patch out of range.
    let out = run(&["inspect", "--features", s(&feat), "--text", s(&ds.text_path), "--patch", "99,0"]);
    assert_eq!(out.status.code(), Some(3));

    // Evaluation: class with no records.
    let out = run(&[
        "ablate-bins", "--manifest", s(&ds.manifest_path), "--text", s(&ds.text_path),
        "--class", "garage", "--report", s(&ds.dir.join("r.txt")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("garage"));
}
