use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use fmtlab::io::{read_tensor, write_tensor, Dtype};
use fmtlab::Tensor;

fn fmtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmtlab"))
        .args(args)
        .env_remove("FMTLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema() -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/report_envelope.schema.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Checks the parts of the schema the envelope relies on: required keys, no
/// extras, and the command enumeration.
fn assert_envelope(v: &Value, command: &str) {
    let s = schema();
    let obj = v.as_object().expect("envelope is an object");
    for k in s["required"].as_array().unwrap() {
        assert!(obj.contains_key(k.as_str().unwrap()), "missing {k}");
    }
    let allowed = s["properties"].as_object().unwrap();
    for k in obj.keys() {
        assert!(allowed.contains_key(k), "unexpected key {k}");
    }
    assert_eq!(v["tool"], "fmtlab");
    assert_eq!(v["command"], command);
    assert!(s["properties"]["command"]["enum"]
        .as_array()
        .unwrap()
        .contains(&v["command"]));
    assert!(v["config"].is_object());
    assert!(v["result"].is_object() || v["result"].is_array());
    assert!(v["duration_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn crossover_single_pair() {
    let v = json(&fmtlab(&["crossover", "--pair", "MXINT8:MXFP8"]));
    assert_envelope(&v, "crossover");
    let k = v["result"]["kappa_star"].as_f64().unwrap();
    assert!((k - 7.55).abs() < 0.3, "{k}");
    assert_eq!(v["config"]["rho"], 1.5);
}

#[test]
fn stability_fp32_is_zero() {
    let out = fmtlab(&["stability", "--precision", "fp32", "--n", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_envelope(&v, "stability");
    assert_eq!(v["result"]["ratio"], 0.0);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn exit_codes() {
    let out = fmtlab(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    assert_eq!(
        fmtlab(&["qsnr-theory", "--format", "MXINT9", "--kappa", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fmtlab(&["stability", "--precision", "fp64"]).status.code(), Some(2));
    assert_eq!(
        fmtlab(&["hwcost-mixed", "--scheme", "int_reuse_9"]).status.code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ftnsr");
    std::fs::write(&bad, b"XTNSR1\0\x01").unwrap();
    let out = fmtlab(&["quantize", "--in", bad.to_str().unwrap(), "--format", "MXINT8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 0"));
}

#[test]
fn quantize_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.ftnsr");
    let output = dir.path().join("y.ftnsr");
    let t = Tensor::from_fn(vec![4, 64], |i| ((i * 37 % 101) as f64 - 50.0) / 7.0).unwrap();
    write_tensor(&t, &input, Dtype::F32).unwrap();
    let v = json(&fmtlab(&[
        "quantize",
        "--in",
        input.to_str().unwrap(),
        "--format",
        "MXFP4",
        "--out",
        output.to_str().unwrap(),
    ]));
    assert_envelope(&v, "quantize");
    assert_eq!(v["result"]["blocks"], 8);
    let y = read_tensor(&output).unwrap();
    assert_eq!(y.shape(), t.shape());
    let q = fmtlab::quantize_tensor(&t, &fmtlab::lookup_format("MXFP4").unwrap(), -1, None).unwrap();
    assert_eq!(y, q.dequantized);
}

#[test]
fn exact_reconstruction_reports_inf() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.ftnsr");
    write_tensor(
        &Tensor::from_fn(vec![1, 32], |i| i as f64 - 16.0).unwrap(),
        &input,
        Dtype::F32,
    )
    .unwrap();
    let v = json(&fmtlab(&[
        "quantize",
        "--in",
        input.to_str().unwrap(),
        "--format",
        "MXINT8",
    ]));
    assert_eq!(v["result"]["qsnr_db"], "inf");
}

#[test]
fn stochastic_commands_replay() {
    let run = || {
        json(&fmtlab(&[
            "linear-sim",
            "--format",
            "MXINT4",
            "--dims",
            "32x64x32",
            "--seed",
            "3",
            "--rotate",
            "--rotate-seed",
            "11",
        ]))
    };
    let (a, b) = (run(), run());
    assert_envelope(&a, "linear-sim");
    assert_eq!(a["result"].to_string(), b["result"].to_string());
    assert_eq!(a["config"]["rotate_seed"], 11);
    assert_eq!(a["config"]["seed"], 3);
    assert_eq!(a["result"]["sites"].as_array().unwrap().len(), 6);

    let dir = tempfile::tempdir().unwrap();
    let csv = |name: &str| {
        let p = dir.path().join(name);
        let out = fmtlab(&[
            "mc-qsnr",
            "--pair",
            "MXINT4:MXFP4",
            "--tensors",
            "3",
            "--shape",
            "4x256",
            "--seed",
            "5",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(p).unwrap()
    };
    let (x, y) = (csv("a.csv"), csv("b.csv"));
    let body = |s: &str| s.lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&x), body(&y));
    assert!(x.starts_with("# fmtlab "));
    assert!(x.contains("\"seed\":5"));
    assert_eq!(x.lines().nth(1), Some("tensor_id,kappa,qsnr_int,qsnr_fp"));
    assert_eq!(x.lines().count(), 5);
}

#[test]
fn qsnr_curve_csv() {
    let out = fmtlab(&["qsnr-curve", "--pairs", "NVINT4:NVFP4", "--kappa", "1:2:0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# fmtlab "));
    assert_eq!(lines[1], "kappa,format,qsnr_db");
    assert_eq!(lines.len(), 2 + 3 * 2);
}

#[test]
fn hwcost_commands() {
    let v = json(&fmtlab(&["hwcost", "--format", "MXINT8"]));
    assert_envelope(&v, "hwcost");
    let int_area = v["result"]["area_total"].as_f64().unwrap();
    let fp_area = json(&fmtlab(&["hwcost", "--format", "MXFP8"]))["result"]["area_total"]
        .as_f64()
        .unwrap();
    assert!(int_area < fp_area);

    let dir = tempfile::tempdir().unwrap();
    let cells = dir.path().join("cells.json");
    std::fs::write(&cells, r#"{"FA": {"area": 2.0, "energy": 2.0}, "toggle_rate": 0.5}"#).unwrap();
    let v = json(&fmtlab(&[
        "hwcost",
        "--format",
        "MXINT8",
        "--cells",
        cells.to_str().unwrap(),
    ]));
    assert_eq!(v["result"]["cells"]["toggle_rate"], 0.5);

    let v = json(&fmtlab(&["hwcost-mixed", "--scheme", "int_reuse_2"]));
    assert_envelope(&v, "hwcost-mixed");
    assert!(v["result"]["energy"].as_f64().unwrap() > 0.0);
}

#[test]
fn gen_corpus_then_crest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("corpus");
    let out = fmtlab(&[
        "gen-corpus",
        "--tensors",
        "3",
        "--shape",
        "8x128",
        "--seed",
        "4",
        "--outlier",
        "12",
        "--dir",
        d.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
    assert_envelope(&manifest, "gen-corpus");
    let files: Vec<String> = manifest["result"]["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| d.join(f.as_str().unwrap()).to_string_lossy().into_owned())
        .collect();
    assert_eq!(files.len(), 3);

    let mut args = vec!["crest", "--block", "32", "--in"];
    args.extend(files.iter().map(String::as_str));
    let plain = json(&fmtlab(&args));
    assert_envelope(&plain, "crest");
    args.push("--rotate");
    let rotated = json(&fmtlab(&args));
    let m = |v: &Value| v["result"]["mean"].as_f64().unwrap();
    assert!(m(&rotated) < m(&plain));
    assert_eq!(plain["result"]["count"], 3);
}

#[test]
fn thread_flag_does_not_change_results() {
    let run = |t: &str| {
        json(&fmtlab(&[
            "--threads",
            t,
            "stability",
            "--precision",
            "bf16",
            "--n",
            "300",
            "--seed",
            "9",
        ]))["result"]
            .to_string()
    };
    assert_eq!(run("1"), run("4"));
    assert_eq!(fmtlab(&["--threads", "0", "formats"]).status.code(), Some(2));
}

#[test]
fn formats_listing() {
    let v = json(&fmtlab(&["formats"]));
    assert_envelope(&v, "formats");
    assert_eq!(v["result"].as_array().unwrap().len(), 8);
    let out = fmtlab(&["formats", "--table"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("NVFP4"));
}
