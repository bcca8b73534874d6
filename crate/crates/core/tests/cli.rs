use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sideband_qrng::pipeline::SAMPLE_CONFIG;

const SAMPLES: u64 = 1_000_000;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sideband-qrng"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// The reference config with desk volumes cut down for a quick run.
fn small_config(dir: &Path) -> PathBuf {
    let text = SAMPLE_CONFIG
        .replacen(
            "samples_per_channel = 10_000_000",
            &format!("samples_per_channel = {SAMPLES}"),
            1,
        )
        .replacen("correlation_bits = 10_000_000", "correlation_bits = 1_000_000", 1)
        .replacen("bitmap_side = 500", "bitmap_side = 64", 1);
    assert_ne!(text, SAMPLE_CONFIG);
    let p = dir.join("small.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn plan_prints_reference_sizes() {
    let o = run(&["plan"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for m in ["581", "548", "519", "2.91", "2.74", "2.60", "8.25"] {
        assert!(text.contains(m), "missing {m} in\n{text}");
    }
}

#[test]
fn run_is_deterministic_and_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "timing.json")
        .collect();
    names.sort();
    assert!(names.contains(&"manifest.json".to_string()));
    for n in &names {
        assert_eq!(
            std::fs::read(a.join(n)).unwrap(),
            std::fs::read(b.join(n)).unwrap(),
            "{n} differs"
        );
    }

    // floor(1e6 * 16 / 768) blocks per channel
    let blocks = SAMPLES * 16 / 768;
    assert_eq!(blocks, 20_833);
    let mut total = 0;
    for (id, m) in [(1, 581u64), (2, 548), (3, 519)] {
        let len = std::fs::metadata(a.join(format!("ch{id}.bin"))).unwrap().len();
        assert_eq!(len, (blocks * m).div_ceil(8), "channel {id}");
        total += blocks * m;
    }
    let len = std::fs::metadata(a.join("cumulative.bin")).unwrap().len();
    assert_eq!(len, total.div_ceil(8));

    let manifest: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cumulative"]["bits"], total);
    assert_eq!(manifest["channels"][0]["bits_out"], blocks * 581);
}

#[test]
fn ascii_output_for_selected_channel() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("o");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--channels",
        "2",
        "--format",
        "ascii",
        "--seed",
        "0xabc",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("ch2.txt")).unwrap();
    let digits = text.chars().filter(|c| *c == '0' || *c == '1').count() as u64;
    assert_eq!(digits, SAMPLES * 16 / 768 * 548);
    assert!(!out.join("ch1.txt").exists());
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed_origin"], "command_line");
}

#[test]
fn overlapping_bands_are_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("overlap.toml");
    let text = SAMPLE_CONFIG.replacen(
        "center_freq_hz = 1_000_000_000",
        "center_freq_hz = 650_000_000",
        1,
    );
    std::fs::write(&p, text).unwrap();
    let o = run(&["plan", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("overlap"));
}

#[test]
fn argument_errors_exit_2() {
    assert_eq!(code(&run(&["plan", "--seed", "0xZZ"])), 2);
    assert_eq!(code(&run(&["plan", "--channels", "7"])), 2);
    assert_eq!(code(&run(&["plan", "--bogus"])), 2);
    assert_eq!(code(&run(&["plan", "--config", "/nonexistent/x.toml"])), 4);
}

#[test]
fn analyze_flags_self_pair_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("o");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--channels",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    let f = out.join("ch1.bin");
    let rep = tmp.path().join("rep");
    let o = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
        f.to_str().unwrap(),
        f.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&std::fs::read(rep.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(report["pairs"][0]["report"]["expected_dependent"], true);
    let passed = report["passed"].as_bool().unwrap();
    assert_eq!(code(&o), if passed { 0 } else { 3 });
    assert!(rep.join("analysis.txt").exists());
}

#[test]
fn malformed_inputs_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.raw");
    std::fs::write(&bad, b"SQRW\x01\x00").unwrap();
    let o = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        code(&run(&[
            "analyze",
            tmp.path().join("missing.bin").to_str().unwrap()
        ])),
        4
    );
}
