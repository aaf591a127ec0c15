use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tempotok(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempotok"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tempotok(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// A month-unit lognormal dataset in a fresh directory.
fn dataset(seed: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    ok(&[
        "gen", "--shape", "lognormal", "--sequences", "30", "--length", "12", "--seed", seed, "--unit", "month",
        "--out", p(&data),
    ]);
    (dir, data)
}

#[test]
fn version_prints_format() {
    let out = ok(&["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(&format!("spec format {}", tempotok::FORMAT_VERSION)), "{text}");
}

#[test]
fn fit_writes_loadable_spec_and_manifest() {
    let (dir, data) = dataset("1");
    let spec = dir.path().join("spec.json");
    let vocab = dir.path().join("vocab.json");
    ok(&[
        "fit", "--strategy", "rsq", "--scale", "log", "--levels", "64,64,64,64", "--unit", "month", "--data",
        p(&data), "--out", p(&spec), "--manifest", p(&vocab),
    ]);
    let loaded = tempotok::load_spec(&spec).unwrap();
    assert_eq!(loaded.unit, tempotok::TimeUnit::Month);
    assert_eq!(loaded.tokens_per_value().count, 4);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(&vocab).unwrap()).unwrap();
    let tokens: Vec<String> = serde_json::from_value(manifest["tokens"].clone()).unwrap();
    assert_eq!(tokens, tempotok::Tokenizer::new(loaded).vocab().unwrap());
}

/// Largest allowed |decoded - original| interval error, in months.
fn bound(strategy: &str, v: f64) -> f64 {
    let spu = tempotok::TimeUnit::Month.seconds_per_unit();
    match strategy {
        "numeric" => 0.5e-6 + 1e-12,
        "byte" => {
            let f = v as f32;
            let ulp = f32::from_bits(f.to_bits() + 1) - f;
            (ulp as f64) / 2.0
        }
        // timestamps are integer seconds; the stored interval may differ
        // from the timestamp gap by the generator's rounding
        "cal-rel" => (1.0 + 1e-9) / spu,
        other => panic!("no bound for {other}"),
    }
}

#[test]
fn encode_decode_round_trip() {
    let (dir, data) = dataset("2");
    let original = jsonl(&data);
    for strategy in ["numeric", "byte", "cal-rel"] {
        for order in ["type-time", "time-type"] {
            let spec = dir.path().join(format!("{strategy}.json"));
            let toks = dir.path().join("toks.jsonl");
            let dec = dir.path().join("dec.jsonl");
            ok(&["fit", "--strategy", strategy, "--unit", "month", "--data", p(&data), "--out", p(&spec)]);
            ok(&["encode", "--spec", p(&spec), "--data", p(&data), "--order", order, "--out", p(&toks)]);
            ok(&["decode", "--spec", p(&spec), "--data", p(&toks), "--order", order, "--out", p(&dec)]);
            let decoded = jsonl(&dec);
            assert_eq!(decoded.len(), original.len());
            for (a, b) in original.iter().zip(&decoded) {
                assert_eq!(a["type_text"], b["type_text"]);
                for (v, back) in numbers(&a["interval"]).iter().zip(numbers(&b["interval"])) {
                    let err = (back - v).abs();
                    assert!(err <= bound(strategy, *v), "{strategy} {order}: {v} -> {back}");
                }
            }
        }
    }
}

#[test]
fn abs_calendar_round_trips_timestamps() {
    let (dir, data) = dataset("3");
    let spec = dir.path().join("cal.json");
    let toks = dir.path().join("toks.jsonl");
    let dec = dir.path().join("dec.jsonl");
    ok(&["fit", "--strategy", "cal-abs", "--resolution", "second", "--unit", "month", "--data", p(&data), "--out", p(&spec)]);
    ok(&["encode", "--spec", p(&spec), "--data", p(&data), "--out", p(&toks)]);
    ok(&["decode", "--spec", p(&spec), "--data", p(&toks), "--out", p(&dec)]);
    for (a, b) in jsonl(&data).iter().zip(jsonl(&dec)) {
        assert_eq!(a["timestamp"], b["timestamp"]);
        assert_eq!(a["type_text"], b["type_text"]);
    }
}

#[test]
fn quantized_round_trip_matches_library_codec() {
    let (dir, data) = dataset("4");
    for (strategy, extra) in [("bin", ["--bins", "256"]), ("rsq", ["--levels", "64,64,64,64"])] {
        let spec_path = dir.path().join(format!("{strategy}.json"));
        let toks = dir.path().join("toks.jsonl");
        let dec = dir.path().join("dec.jsonl");
        ok(&[
            "fit", "--strategy", strategy, "--scale", "log", extra[0], extra[1], "--unit", "month", "--data",
            p(&data), "--out", p(&spec_path),
        ]);
        ok(&["encode", "--spec", p(&spec_path), "--data", p(&data), "--out", p(&toks)]);
        ok(&["decode", "--spec", p(&spec_path), "--data", p(&toks), "--out", p(&dec)]);
        let spec = tempotok::load_spec(&spec_path).unwrap();
        for (a, b) in jsonl(&data).iter().zip(jsonl(&dec)) {
            for (v, back) in numbers(&a["interval"]).iter().zip(numbers(&b["interval"])) {
                let expected = spec.decode_value(&spec.encode_value(*v).unwrap()).unwrap();
                assert_eq!(back, expected, "{strategy}: {v}");
            }
        }
    }
}

#[test]
fn usage_errors_exit_1() {
    let (dir, data) = dataset("5");
    let out_path = dir.path().join("s.json");
    let cases: [&[&str]; 5] = [
        &["fit", "--strategy", "rsq", "--levels", "0", "--unit", "month", "--data", p(&data), "--out", p(&out_path)],
        &["fit", "--strategy", "bin", "--bins", "0", "--unit", "month", "--data", p(&data), "--out", p(&out_path)],
        &["fit", "--strategy", "teleport", "--unit", "month", "--data", p(&data), "--out", p(&out_path)],
        &["encode", "--spec"],
        &[],
    ];
    for args in cases {
        let out = tempotok(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error[usage]: "), "{err}");
        assert!(err.contains("Usage:"), "{err}");
    }
    assert!(!out_path.exists());
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, r#"{"split":"train","type_text":["A"],"timestamp":[1000],"interval":[-1.0]}"#).unwrap();
    let missing = dir.path().join("missing.jsonl");
    for args in [
        vec!["stats", "--data", p(&bad), "--unit", "hour"],
        vec!["stats", "--data", p(&missing), "--unit", "hour"],
    ] {
        let out = tempotok(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error[data]: "), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }

    // tampered spec
    let (dir, data) = dataset("6");
    let spec = dir.path().join("spec.json");
    ok(&["fit", "--strategy", "bin", "--unit", "month", "--data", p(&data), "--out", p(&spec)]);
    let text = fs::read_to_string(&spec).unwrap().replacen("256", "255", 1);
    fs::write(&spec, text).unwrap();
    let out = tempotok(&["encode", "--spec", p(&spec), "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("checksum mismatch"));

    // unit disagreement
    let spec = dir.path().join("byte.json");
    ok(&["fit", "--strategy", "byte", "--unit", "month", "--data", p(&data), "--out", p(&spec)]);
    let out = tempotok(&["encode", "--spec", p(&spec), "--data", p(&data), "--unit", "hour"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unit mismatch"));
}

/// Runs a full pipeline in `dir` and returns every output file's bytes.
fn pipeline(dir: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    let d = dir.join("d.jsonl");
    let spec = dir.join("spec.json");
    let toks = dir.join("toks.jsonl");
    let dec = dir.join("dec.jsonl");
    let bench = dir.join("bench.csv");
    let hist = dir.join("hist");
    ok(&["gen", "--shape", "mixed", "--sequences", "40", "--length", "15", "--seed", "11", "--unit", "hour", "--out", p(&d)]);
    ok(&[
        "--threads", threads, "fit", "--strategy", "rsq", "--scale", "log", "--levels", "16,16", "--unit", "hour",
        "--data", p(&d), "--out", p(&spec),
    ]);
    ok(&["--threads", threads, "encode", "--spec", p(&spec), "--data", p(&d), "--out", p(&toks)]);
    ok(&["--threads", threads, "decode", "--spec", p(&spec), "--data", p(&toks), "--out", p(&dec)]);
    ok(&["--threads", threads, "bench", "--data", p(&d), "--unit", "hour", "--out", p(&bench)]);
    ok(&["analyze", "--data", p(&d), "--unit", "hour", "--bins", "20", "--out", p(&hist)]);
    let mut files = Vec::new();
    for path in [d, spec, toks, dec, bench, hist.join("hist_linear.csv"), hist.join("hist_log.csv")] {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.push((name, fs::read(&path).unwrap()));
    }
    files
}

#[test]
fn double_run_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path(), "1");
    let second = pipeline(b.path(), "4");
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn inputs_are_not_modified() {
    let (dir, data) = dataset("7");
    let spec = dir.path().join("spec.json");
    ok(&["fit", "--strategy", "byte", "--unit", "month", "--data", p(&data), "--out", p(&spec)]);
    let before = (fs::read(&data).unwrap(), fs::read(&spec).unwrap());
    ok(&["encode", "--spec", p(&spec), "--data", p(&data), "--out", p(&dir.path().join("t.jsonl"))]);
    ok(&["stats", "--data", p(&data), "--unit", "month"]);
    ok(&["analyze", "--data", p(&data), "--unit", "month"]);
    assert_eq!(before, (fs::read(&data).unwrap(), fs::read(&spec).unwrap()));
}

#[test]
fn stdout_outputs() {
    let (_dir, data) = dataset("8");
    let out = ok(&["stats", "--data", p(&data), "--unit", "month"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("train/val/test"), "{text}");
    assert!(text.contains("consistency      0 "), "{text}");

    let out = ok(&["bench", "--data", p(&data), "--unit", "month", "--strategy", "byte"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("codec floor"));
    assert_eq!(text.lines().count(), 3, "{text}");
}
