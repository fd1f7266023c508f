use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellsieve"))
        .args(args)
        .output()
        .expect("failed to spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn relation_lines(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| l.starts_with('['))
        .map(str::to_string)
        .collect()
}

const KNOWN_LINES: [&str; 9] = [
    "[D-25] L(λ σ', 3) = (ζ(2) ζ(6)) / ζ(3)",
    "[D-25] L(λ σ', 4) = (ζ(3) ζ(8)) / ζ(4)",
    "[D-25] L(λ σ', 5) = (ζ(4) ζ(10)) / ζ(5)",
    "[D-42] L(λ σ'^2, 4) = (ζ(3)^2 ζ(8)) / (ζ(2) ζ(6))",
    "[D-42] L(λ σ'^2, 5) = (ζ(4)^2 ζ(6) ζ(10)) / (ζ(3) ζ(5) ζ(8))",
    "[D-42] L(λ σ'^2, 6) = (ζ(5)^2 ζ(8) ζ(12)) / (ζ(4) ζ(6) ζ(10))",
    "[D-53] L(λ, 2) = ζ(4) / ζ(2)",
    "[D-53] L(λ, 3) = ζ(6) / ζ(3)",
    "[D-53] L(λ, 4) = ζ(8) / ζ(4)",
];

const UNKNOWN_LINES: [&str; 6] = [
    "[!!!!] L(λ τ, 4) = ζ(8)^2 / ζ(4)^2",
    "[!!!!] L(λ τ, 5) = ζ(10)^2 / ζ(5)^2",
    "[!!!!] L(λ τ, 6) = ζ(12)^2 / ζ(6)^2",
    "[!!!!] L(λ τ σ', 5) = (ζ(4)^2 ζ(9) ζ(10)^2) / (ζ(5)^2 ζ(18))",
    "[!!!!] L(λ τ σ', 6) = (ζ(5)^2 ζ(11) ζ(12)^2) / (ζ(6)^2 ζ(22))",
    "[!!!!] L(λ τ σ', 7) = (ζ(6)^2 ζ(13) ζ(14)^2) / (ζ(7)^2 ζ(26))",
];

#[test]
fn golden_shell_output() {
    let cfg = data("lts.json");
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let expected = std::fs::read_to_string(data("lts.shell.txt")).unwrap();
    assert_eq!(stdout(&out), expected);
    let lines = relation_lines(&out);
    assert_eq!(&lines[..9], &KNOWN_LINES);
}

#[test]
fn wider_shift_window_contains_reference_listing() {
    let cfg = data("lts_wide.json");
    let out = run(&["-c", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let lines = relation_lines(&out);
    for want in KNOWN_LINES.iter().chain(&UNKNOWN_LINES) {
        assert!(lines.iter().any(|l| l == want), "missing {want}");
    }
}

#[test]
fn primes_agree() {
    let cfg = data("lts.json");
    let a = run(&["-c", cfg.to_str().unwrap(), "--prime", "997"]);
    let b = run(&["-c", cfg.to_str().unwrap(), "--prime", "1009"]);
    assert_eq!(relation_lines(&a), relation_lines(&b));
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = data("lts_wide.json");
    let a = run(&["-c", cfg.to_str().unwrap(), "--threads", "8"]);
    let b = run(&["-c", cfg.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn conjecture_catalog_classifies_lambda_tau() {
    let cfg = data("lts_wide.json");
    let out = run(&[
        "-c",
        cfg.to_str().unwrap(),
        "--catalog",
        "known",
        "--catalog",
        "conjectures",
    ]);
    let text = stdout(&out);
    assert!(
        text.contains("[C-22] L(λ τ, 5) = ζ(10)^2 / ζ(5)^2"),
        "{text}"
    );
    assert!(
        text.contains("[C-25] L(λ τ σ', 5) = (ζ(4)^2 ζ(9) ζ(10)^2) / (ζ(5)^2 ζ(18))"),
        "{text}"
    );
    assert!(!text.contains("[!!!!]"));
}

#[test]
fn config_errors_exit_1() {
    let out = run(&["-c", data("empty.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("factor list is empty"));

    let out = run(&["-c", data("malformed.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(&["-c", data("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["-c", data("lts.json").to_str().unwrap(), "--prime", "1000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn catalog_file_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[\n  {\"id\": \"X-1\", \"terms\": 7}\n]\n").unwrap();
    let out = run(&[
        "-c",
        data("lts.json").to_str().unwrap(),
        "--catalog",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn user_catalog_file() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("mine.json");
    std::fs::write(
        &cat,
        r#"[{"id": "X-1", "terms": [
            {"expr": "lambda * tau", "shift": "s", "exp": 1},
            {"expr": "one", "shift": "2*s", "exp": -2},
            {"expr": "one", "shift": "s", "exp": 2}
        ], "conditions": []}]"#,
    )
    .unwrap();
    let out = run(&[
        "-c",
        data("lts.json").to_str().unwrap(),
        "--catalog",
        cat.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("[X-1] L(λ τ, 3) = ζ(6)^2 / ζ(3)^2"), "{text}");
    assert!(text.contains("# relations: 15"));
}

#[test]
fn verify_flag_appends_status() {
    let out = run(&[
        "-c",
        data("lts.json").to_str().unwrap(),
        "--verify",
        "--verify-n",
        "20000",
        "--verify-tol",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let lines = relation_lines(&out);
    assert!(
        lines.iter().all(|l| l.contains("  verified (res=")),
        "{lines:?}"
    );
}

#[test]
fn failed_verification_exits_2() {
    // Too small a cutoff for a tight tolerance.
    let out = run(&[
        "-c",
        data("lts.json").to_str().unwrap(),
        "--verify",
        "--verify-n",
        "10",
        "--verify-tol",
        "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAILED"));
}

#[test]
fn json_and_latex_formats() {
    let cfg = data("lts.json");
    let out = run(&["-c", cfg.to_str().unwrap(), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rels = doc["relations"].as_array().unwrap();
    assert_eq!(rels.len(), 15);
    assert_eq!(rels[0]["id"], "D-25");
    assert_eq!(rels[0]["verified"], serde_json::Value::Null);
    assert_eq!(rels[14]["id"], serde_json::Value::Null);
    assert_eq!(doc["summary"]["known"], 9);

    let out = run(&["-c", cfg.to_str().unwrap(), "--format", "latex"]);
    let text = stdout(&out);
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("\\texttt{[D-25]} & $L\\left("));
    assert!(text.contains("% relations: 15"));
}

#[test]
fn debug_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dump.json");
    let out = run(&[
        "-c",
        data("lts.json").to_str().unwrap(),
        "--dump-debug",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["modulus"], 997);
    assert_eq!(
        doc["labels"].as_array().unwrap().len(),
        doc["rows"].as_array().unwrap().len()
    );
}
