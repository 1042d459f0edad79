use std::path::Path;
use std::process::{Command, Output};

fn modclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

#[test]
fn oracle_two_module_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mdg = write(dir.path(), "two_module.mdg", "A B\nB A\n");
    let out = modclust(&["oracle", &mdg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("MQ: 1.000000"), "{text}");
    assert!(text.contains("A\t1\nB\t1\n"), "{text}");
}

#[test]
fn oracle_refuses_large_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = (0..13).map(|i| format!("m{i}\n")).collect();
    let mdg = write(dir.path(), "big.mdg", &lines);
    let out = modclust(&["oracle", &mdg]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("limited to 12 modules"), "{}", stderr(&out));
}

#[test]
fn cluster_is_deterministic() {
    let case = concat!(env!("CARGO_MANIFEST_DIR"), "/cases/layer_monitor.mdg");
    for algorithm in ["tlbo", "atlbo"] {
        let args = ["cluster", case, "--seed", "7", "--algorithm", algorithm];
        let first = modclust(&args);
        let second = modclust(&args);
        assert!(first.status.success(), "{}", stderr(&first));
        assert_eq!(stdout(&first), stdout(&second));
        let text = stdout(&first);
        assert!(text.contains("evaluations: 5000"), "{text}");
        assert!(text.contains(&format!("algorithm: {algorithm}")));
        // one assignment line per module
        assert_eq!(text.lines().filter(|l| l.contains('\t')).count(), 8);
    }
}

#[test]
fn cluster_honours_budget_flags() {
    let case = concat!(env!("CARGO_MANIFEST_DIR"), "/cases/layer_monitor.mdg");
    let out = modclust(&["cluster", case, "--pop-size", "10", "--max-evals", "123"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("evaluations: 123"));
    let out = modclust(&["cluster", case, "--pop-size", "10", "--max-evals", "5"]);
    assert!(!out.status.success());
}

#[test]
fn bench_missing_config() {
    let out = modclust(&["bench", "--config", "missing.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("file not found"), "{}", stderr(&out));
}

#[test]
fn usage_errors() {
    assert!(!modclust(&["cluster"]).status.success());
    assert!(!modclust(&["oracle", "x.mdg", "--bogus"]).status.success());
    assert!(!modclust(&["frobnicate"]).status.success());
    let out = modclust(&["cluster", "nope.mdg"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("file not found"));
}

#[test]
fn fuzzy_eval_default_controller() {
    let out = modclust(&["fuzzy-eval", "--qm", "10", "--im", "90", "--dm", "90"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value: f64 = stdout(&out).trim().parse().unwrap();
    assert!(value < 50.0);

    let out = modclust(&["fuzzy-eval", "--qm", "50", "--im", "50", "--dm", "50"]);
    assert_eq!(stdout(&out).trim(), "undefined");
}

#[test]
fn fuzzy_eval_custom_and_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "local.fis",
        "[input Qm]\nany = 0 0 100 100\n[input Im]\nany = 0 0 100 100\n[input Dm]\nany = 0 0 100 100\n\
         [output selection]\nlocal = 50 70 100 100\n[rules]\nIF Qm IS any THEN selection IS local\n",
    );
    let out = modclust(&["fuzzy-eval", "--fis", &good, "--qm", "1", "--im", "2", "--dm", "3"]);
    let value: f64 = stdout(&out).trim().parse().unwrap();
    assert!(value > 50.0);

    let bad = write(dir.path(), "bad.fis", "[input Qm]\nlow = 30 20 40 50\n");
    let out = modclust(&["fuzzy-eval", "--fis", &bad, "--qm", "1", "--im", "2", "--dm", "3"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("trapezoid not monotone"), "{}", stderr(&out));
}
