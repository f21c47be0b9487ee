use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qimg::pixmap::{write_pgm, PixelImage};

fn qimg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qimg"))
        .args(args)
        .output()
        .unwrap()
}

fn sample(dir: &Path, name: &str, n: u32) -> String {
    let img = PixelImage::from_fn(n, 8, |y, x| ((y * 11 + x * 5) % 256) as u32).unwrap();
    let p = dir.join(name);
    write_pgm(&img, &p).unwrap();
    p.to_str().unwrap().to_owned()
}

fn strip_timing(mut v: serde_json::Value) -> serde_json::Value {
    v.as_object_mut().unwrap().remove("timing_seconds");
    v
}

#[test]
fn cost_report() {
    let out = qimg(&["cost", "--n", "10", "--q", "8"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = v["costs"][0]["r"].as_f64().unwrap();
    assert!((r - 0.89).abs() < 0.01, "{r}");
}

#[test]
fn cost_domain_error_exit_code() {
    let out = qimg(&["cost", "--n", "1", "--q", "1"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(!out.stderr.is_empty());
}

#[test]
fn threshold_curve_csv() {
    let out = qimg(&["cost", "--curve", "m", "--q", "4..40"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let qi = headers.iter().position(|h| h == "q").unwrap();
    let ni = headers.iter().position(|h| h == "min_n").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 37);
    let q8 = rows.iter().find(|r| &r[qi] == "8").unwrap();
    assert_eq!(&q8[ni], "7");
}

#[test]
fn usage_errors() {
    assert_eq!(qimg(&["prepare"]).status.code(), Some(2));
    assert_eq!(
        qimg(&["prepare", "x.pgm", "--scheme", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.pgm");
    assert_eq!(
        qimg(&["prepare", missing.to_str().unwrap()]).status.code(),
        Some(3)
    );
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n8 8\n255\n").unwrap();
    let out_dir = dir.path().to_str().unwrap();
    assert_eq!(
        qimg(&["prepare", bad.to_str().unwrap(), "--out-dir", out_dir])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn prepare_plain_writes_circuit_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path(), "s.pgm", 3);
    let od = dir.path().to_str().unwrap();
    let out = qimg(&["prepare", &img, "--out-dir", od]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let circuit = fs::read_to_string(dir.path().join("s.plain.circuit")).unwrap();
    assert!(!circuit.is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.plain.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "prepare");
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn bec_refuses_large_images_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path(), "big.pgm", 4);
    let od = dir.path().to_str().unwrap();
    let out = qimg(&[
        "prepare",
        &img,
        "--scheme",
        "bec",
        "--max-n",
        "3",
        "--out-dir",
        od,
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    let out = qimg(&[
        "prepare",
        &img,
        "--scheme",
        "bec",
        "--max-n",
        "3",
        "--force",
        "--out-dir",
        od,
    ]);
    assert!(out.status.success());
    assert!(dir.path().join("big.bec.circuit").exists());
}

#[test]
fn qjpeg_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path(), "s.pgm", 4);
    let mut reports = Vec::new();
    for sub in ["a", "b"] {
        let od = dir.path().join(sub);
        let out = qimg(&[
            "prepare",
            &img,
            "--scheme",
            "qjpeg",
            "--trace",
            "--out-dir",
            od.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(od.join("s.qjpeg.recovered.pgm").exists());
        let trace = fs::read_to_string(od.join("s.qjpeg.trace.jsonl")).unwrap();
        assert_eq!(trace.lines().count(), 256);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(od.join("s.qjpeg.json")).unwrap()).unwrap();
        assert!(v["psnr"]["recovered"].as_f64().unwrap() > 20.0);
        reports.push(strip_timing(v));
        let c = fs::read(od.join("s.qjpeg.circuit")).unwrap();
        reports.push(serde_json::Value::String(qimg::report::sha256_hex(&c)));
    }
    assert_eq!(reports[0], reports[2]);
    assert_eq!(reports[1], reports[3]);
}

#[test]
fn corpus_rows_and_zero_image() {
    let dir = tempfile::tempdir().unwrap();
    sample(dir.path(), "a.pgm", 3);
    write_pgm(&PixelImage::filled(3, 8, 0).unwrap(), dir.path().join("zero.pgm")).unwrap();
    let od = dir.path().join("out");
    let out = qimg(&[
        "corpus",
        dir.path().to_str().unwrap(),
        "--bec",
        "--out-dir",
        od.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(od.join("corpus.csv").exists());
    assert!(od.join("corpus_stats.csv").exists());
    assert!(od.join("corpus.json").exists());
}

#[test]
fn empty_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qimg(&["corpus", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn check_is_seeded() {
    let a = qimg(&["check", "--seed", "7", "--cases", "5"]);
    let b = qimg(&["check", "--seed", "7", "--cases", "5"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}
