//! End-to-end checks of the `vforge` binary: the subcommand chain, exit
//! codes, and byte-level reproducibility of pipeline artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vforge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vforge"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn asm_check_reports_shape_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let tea = corpus_dir().join("tea.s");
    let out = vforge(&["asm", "check", tea.to_str().unwrap()], dir.path());
    assert_ok(&out, "asm check");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("32 instructions"), "{text}");
    assert!(text.contains("3 functions"), "{text}");

    let bad = dir.path().join("bad.s");
    fs::write(&bad, "FROB r1, r2\n").unwrap();
    let out = vforge(&["asm", "check", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn vs_score_of_identical_program_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let tea = corpus_dir().join("tea.s");
    let tea = tea.to_str().unwrap();
    let out = vforge(&["vs", "score", "--a", tea, "--b", tea], dir.path());
    assert_ok(&out, "vs score");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("normalized 1.000000"), "{text}");
}

#[test]
fn pipeline_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // Empty corpus: configuration error, exit 1 with a diagnostic.
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = vforge(
        &[
            "pipeline",
            "--corpus",
            empty.to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no programs found"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // A program too trivial to diversify into nine variants: most pass
    // sequences reproduce it and the pool dedups far below k. Selection
    // cannot be satisfied, which is an equivalence-yield failure, exit 2.
    let trivial = dir.path().join("trivial");
    fs::create_dir_all(&trivial).unwrap();
    fs::write(trivial.join("only.s"), "HALT\n").unwrap();
    fs::write(trivial.join("only.in"), "").unwrap();
    let out = vforge(
        &[
            "pipeline",
            "--corpus",
            trivial.to_str().unwrap(),
            "--out",
            dir.path().join("y").to_str().unwrap(),
            "--k",
            "9",
            "--seeds",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Small corpus, run twice with one seed: byte-identical artifacts.
    let small = dir.path().join("small");
    fs::create_dir_all(&small).unwrap();
    for name in ["minipad", "fib", "mulsum"] {
        fs::copy(corpus_dir().join(format!("{name}.s")), small.join(format!("{name}.s"))).unwrap();
        fs::copy(corpus_dir().join(format!("{name}.in")), small.join(format!("{name}.in"))).unwrap();
    }
    for run in ["run_a", "run_b"] {
        let out = vforge(
            &[
                "pipeline",
                "--corpus",
                small.to_str().unwrap(),
                "--out",
                dir.path().join(run).to_str().unwrap(),
                "--seed",
                "99",
                "--seeds",
                "2",
            ],
            dir.path(),
        );
        assert_ok(&out, "pipeline");
    }
    for artifact in [
        "overhead.csv",
        "minipad/bundle.s",
        "minipad/selection.json",
        "minipad/pool/matrix.csv",
        "fib/bundle.s",
    ] {
        let a = fs::read(dir.path().join("run_a").join(artifact)).unwrap();
        let b = fs::read(dir.path().join("run_b").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs across identical runs");
    }
    // Run reports record their own bundle path; compare the report body.
    let report = |run: &str| -> serde_json::Value {
        let text =
            fs::read_to_string(dir.path().join(run).join("mulsum/runreport.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()["report"].clone()
    };
    assert_eq!(report("run_a"), report("run_b"));
}

#[test]
fn pipeline_overhead_matches_pinned_golden() {
    // Frozen output for the full corpus at seed 7 with 2 seeds per
    // sequence; regenerating must reproduce it byte for byte.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("golden");
    let out = vforge(
        &[
            "pipeline",
            "--corpus",
            corpus_dir().to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            "7",
            "--seeds",
            "2",
        ],
        dir.path(),
    );
    assert_ok(&out, "pipeline");
    let got = fs::read_to_string(out_dir.join("overhead.csv")).unwrap();
    let want = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/overhead_golden.csv"),
    )
    .unwrap();
    assert_eq!(got, want, "overhead.csv drifted from the pinned golden");
}

#[test]
fn gen_select_harden_run_inject_tar_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let base = corpus_dir().join("tea.s");
    fs::copy(corpus_dir().join("tea.in"), dir.path().join("tea.in")).unwrap();
    let base_local = dir.path().join("tea.s");
    fs::copy(&base, &base_local).unwrap();

    let pool = dir.path().join("pool");
    let out = vforge(
        &[
            "variants",
            "gen",
            base_local.to_str().unwrap(),
            "--seeds",
            "3",
            "--out",
            pool.to_str().unwrap(),
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert_ok(&out, "variants gen");
    assert!(pool.join("pool.json").exists());
    assert!(pool.join("matrix.csv").exists());

    let out = vforge(
        &["select", "--pool", pool.to_str().unwrap(), "--k", "3"],
        dir.path(),
    );
    assert_ok(&out, "select");
    assert!(pool.join("selection.json").exists());

    let bundle = dir.path().join("bundle.s");
    let out = vforge(
        &[
            "harden",
            base_local.to_str().unwrap(),
            "--variants",
            pool.to_str().unwrap(),
            "--k",
            "3",
            "--out",
            bundle.to_str().unwrap(),
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert_ok(&out, "harden");
    assert!(dir.path().join("bundle.json").exists());

    // Golden file for experiment mode: the base program's own outputs.
    let (program, inputs) = {
        let text = fs::read_to_string(&base_local).unwrap();
        let p = vforge_core::isa::parse_program_named(&text, "tea").unwrap();
        let i: Vec<u32> = fs::read_to_string(dir.path().join("tea.in"))
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        (p, i)
    };
    let golden_run = vforge_core::isa::execute(&program, &inputs, 1 << 24);
    let golden = dir.path().join("golden.txt");
    let golden_text: String = golden_run
        .outputs
        .iter()
        .map(|w| format!("{w}\n"))
        .collect();
    fs::write(&golden, golden_text).unwrap();

    let report = dir.path().join("runreport.json");
    let trace = dir.path().join("clean.trace");
    let out = vforge(
        &[
            "run",
            bundle.to_str().unwrap(),
            "--inputs",
            dir.path().join("tea.in").to_str().unwrap(),
            "--golden",
            golden.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_ok(&out, "run");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["report"]["verdict"], "clean");
    assert_eq!(doc["report"]["variants_executed"], 2);
    assert_eq!(doc["report"]["undetected_corruption"], false);

    // Trace dump: header plus one 120-bit row per cycle.
    let trace_text = fs::read_to_string(&trace).unwrap();
    let mut lines = trace_text.lines();
    assert!(lines.next().unwrap().starts_with("# vr32 net trace"));
    assert!(lines.next().unwrap().starts_with("# nets: "));
    let row = lines.next().unwrap();
    assert_eq!(row.len(), 120);
    assert!(row.chars().all(|c| c == '0' || c == '1'));

    // A structurally dormant Trojan: clean verdict survives injection.
    let spec = dir.path().join("trojans.json");
    fs::write(
        &spec,
        r#"{"trojans":[{"trigger":{"kind":"combinational","nets":[118,119]},"payload":{"kind":"alu_result_bit","bit":0}}]}"#,
    )
    .unwrap();
    let inject_report = dir.path().join("runreport_inject.json");
    let out = vforge(
        &[
            "trojan",
            "inject",
            "--bundle",
            bundle.to_str().unwrap(),
            "--inputs",
            dir.path().join("tea.in").to_str().unwrap(),
            "--spec",
            spec.to_str().unwrap(),
            "--golden",
            golden.to_str().unwrap(),
            "--out",
            inject_report.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_ok(&out, "trojan inject");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&inject_report).unwrap()).unwrap();
    assert_eq!(doc["report"]["verdict"], "clean");
    assert_eq!(doc["report"]["firings"], serde_json::json!([]));

    let csv = dir.path().join("tar.csv");
    let out = vforge(
        &[
            "tar",
            "--bundle",
            bundle.to_str().unwrap(),
            "--inputs",
            dir.path().join("tea.in").to_str().unwrap(),
            "--k-min",
            "4",
            "--k-max",
            "5",
            "--cap",
            "500",
            "--csv",
            csv.to_str().unwrap(),
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_ok(&out, "tar");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("pair,k,sp_max,T_n,T_m,TAR"), "{text}");
    assert!(text.lines().count() >= 3, "{text}");

    let out = vforge(&["report", dir.path().to_str().unwrap()], dir.path());
    assert_ok(&out, "report");
    let summary = fs::read_to_string(dir.path().join("SUMMARY.md")).unwrap();
    assert!(summary.contains("Trend assertions"), "{summary}");
}

#[test]
fn run_detects_tampered_bundle_image() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("fib.s");
    fs::copy(corpus_dir().join("fib.s"), &base).unwrap();
    fs::copy(corpus_dir().join("fib.in"), dir.path().join("fib.in")).unwrap();

    let pool = dir.path().join("pool");
    assert_ok(
        &vforge(
            &["variants", "gen", base.to_str().unwrap(), "--seeds", "2", "--out", pool.to_str().unwrap()],
            dir.path(),
        ),
        "variants gen",
    );
    assert_ok(
        &vforge(&["select", "--pool", pool.to_str().unwrap(), "--k", "3"], dir.path()),
        "select",
    );
    let bundle = dir.path().join("bundle.s");
    assert_ok(
        &vforge(
            &[
                "harden",
                base.to_str().unwrap(),
                "--variants",
                pool.to_str().unwrap(),
                "--k",
                "3",
                "--out",
                bundle.to_str().unwrap(),
            ],
            dir.path(),
        ),
        "harden",
    );

    // Corrupt one instruction in the image; the loader must refuse it.
    let text = fs::read_to_string(&bundle).unwrap();
    let tampered = text.replacen("ADDI", "SUB", 1);
    assert_ne!(text, tampered);
    fs::write(&bundle, tampered).unwrap();
    let out = vforge(
        &[
            "run",
            bundle.to_str().unwrap(),
            "--inputs",
            dir.path().join("fib.in").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(!out.status.success());
}
