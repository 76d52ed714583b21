use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use factor_cavity::report::read_csv;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_factor-cavity");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("FACTOR_CAVITY_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_BUDGET: &str = "[budget]\npop_size = 400\nsweeps = 20\neval_samples = 4000\npos_trials = 20\nn = 6\ngraphs = 6\n";

const NEGATIVE_ENTRY: &str = r#"
[model]
name = "custom"
dspec = { constant = 2 }
kspec = { constant = 2 }
[model.family]
q = 2
[[model.family.arity]]
k = 2
tables = [[1.0, -0.5, 1.0, 1.0]]
"#;

#[test]
fn check_on_ldgm_passes_and_prints_xi_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "check", "--model", "ldgm", "--eta", "0.1", "--dspec", "2", "--kspec", "2", "--out",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("xi = 1\n"));
    let t = read_csv(&fs::read_to_string(dir.path().join("out/check.csv")).unwrap()).unwrap();
    let names: Vec<&str> = t.rows().iter().map(|r| r[2].as_str()).collect();
    assert_eq!(names, ["DEG", "SYM", "BAL", "POS"]);
    assert!(t.rows().iter().all(|r| r[3] == "true"));
    assert_eq!(t.rows()[1][5], "1");
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["operation"], "check");
    assert_eq!(m["outputs"][0]["path"], "check.csv");
    assert!(m["git_describe"].is_string());
}

#[test]
fn mi_scan_row_at_one_half_is_zero_within_three_se() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "operation = \"mi-scan\"\nseed = 3\n[model]\nname = \"ldgm\"\neta = 0.1\nd = 2\nk = 2\n[grid]\nparam = \"eta\"\nvalues = [0.2, 0.5]\n{SMALL_BUDGET}"
    );
    fs::write(dir.path().join("mi.toml"), cfg).unwrap();
    let o = run(
        dir.path(),
        &["mi-scan", "--config", "mi.toml", "--out", "out", "--quiet"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_csv(&fs::read_to_string(dir.path().join("out/mi-scan.csv")).unwrap()).unwrap();
    assert_eq!(t.header()[2], "mi");
    let half = &t.rows()[1];
    assert_eq!(half[1], "0.5");
    let (mi, se): (f64, f64) = (half[2].parse().unwrap(), half[3].parse().unwrap());
    assert!(mi.abs() <= 3.0 * se + 1e-12, "mi {mi} se {se}");
    let low: f64 = t.rows()[0][2].parse().unwrap();
    assert!(
        low > 0.1,
        "mi at eta 0.2 should be clearly positive, got {low}"
    );
}

#[test]
fn reruns_with_other_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("seed = 11\n[model]\nname = \"sbm\"\nq = 2\nbeta = 1.5\nd = 3\n[grid]\nparam = \"beta\"\nvalues = [0.5, 1.5]\n[sample]\nkind = \"planted\"\n{SMALL_BUDGET}");
    fs::write(dir.path().join("e.toml"), cfg).unwrap();
    for op in ["sample", "exact", "bp", "bethe"] {
        let mut bodies = Vec::new();
        let mut digests = Vec::new();
        for (w, out) in [("1", "a"), ("3", "b")] {
            let o = run(
                dir.path(),
                &[
                    op,
                    "--config",
                    "e.toml",
                    "--workers",
                    w,
                    "--out",
                    out,
                    "--quiet",
                ],
            );
            assert_eq!(code(&o), 0, "{op}: {}", String::from_utf8_lossy(&o.stderr));
            bodies.push(fs::read(dir.path().join(out).join(format!("{op}.csv"))).unwrap());
            let m = json(&dir.path().join(out).join("manifest.json"));
            digests.push((
                m["inputs_digest"].clone(),
                m["outputs"][0]["sha256"].clone(),
            ));
        }
        assert_eq!(
            bodies[0], bodies[1],
            "{op} output depends on the worker count"
        );
        assert_eq!(digests[0], digests[1]);
    }
}

#[test]
fn seed_flag_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let args = |seed: &'static str, out: &'static str| {
        [
            "sample", "--model", "sbm", "--beta", "1", "--d", "3", "--seed", seed, "--out", out,
            "--quiet",
        ]
    };
    assert_eq!(code(&run(dir.path(), &args("1", "a"))), 0);
    assert_eq!(code(&run(dir.path(), &args("2", "b"))), 0);
    let a = fs::read_to_string(dir.path().join("a/graphs/p0-g0.txt")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/graphs/p0-g0.txt")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn negative_table_entry_is_an_assumption_violation() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), NEGATIVE_ENTRY).unwrap();
    for (op, kind) in [
        ("check", "check-failed"),
        ("mi-scan", "sym-violation"),
        ("bethe", "sym-violation"),
        ("selftest", "check-failed"),
    ] {
        let out = format!("out-{op}");
        let o = run(
            dir.path(),
            &[op, "--config", "bad.toml", "--out", &out, "--quiet"],
        );
        assert_eq!(code(&o), 1, "{op}: {}", String::from_utf8_lossy(&o.stderr));
        let rec = json(&dir.path().join(&out).join("error.json"));
        assert_eq!(rec["kind"], kind, "{op}");
        assert_eq!(rec["exit_code"], 1);
        assert!(
            rec["message"].as_str().unwrap().contains("SYM")
                || rec["message"].as_str().unwrap().contains("non-positive")
        );
    }
    let t = read_csv(&fs::read_to_string(dir.path().join("out-check/check.csv")).unwrap()).unwrap();
    let sym = t.rows().iter().find(|r| r[2] == "SYM").unwrap();
    assert_eq!(sym[3], "false");
    assert!(!sym[6].is_empty(), "a failed check carries a witness");
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("big.toml"),
        "[model]\nname = \"sbm\"\nbeta = 1.0\nd = 3\n[budget]\nn = 40\ngraphs = 1\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["exact", "--config", "big.toml", "--out", "out", "--quiet"],
    );
    assert_eq!(code(&o), 2);
    assert_eq!(
        json(&dir.path().join("out/error.json"))["kind"],
        "cap-exceeded"
    );

    let o = run(dir.path(), &["bethe", "--out", "out2"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["check", "--model", "ising", "--out", "out3"]);
    assert_eq!(code(&o), 2);
    assert!(json(&dir.path().join("out3/error.json"))["message"]
        .as_str()
        .unwrap()
        .contains("unknown model"));
}

#[test]
fn exact_on_a_saved_graph_matches_the_sampled_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[model]\nname = \"kspin\"\nbeta = 0.8\nd = 2\n[budget]\nn = 7\ngraphs = 1\n";
    fs::write(dir.path().join("s.toml"), base).unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            &["sample", "--config", "s.toml", "--out", "s", "--quiet"]
        )),
        0
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &["exact", "--config", "s.toml", "--out", "e1", "--quiet"]
        )),
        0
    );
    fs::write(
        dir.path().join("g.toml"),
        format!("graph = \"s/graphs/p0-g0.txt\"\n{base}"),
    )
    .unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            &["exact", "--config", "g.toml", "--out", "e2", "--quiet"]
        )),
        0
    );
    let a = read_csv(&fs::read_to_string(dir.path().join("e1/exact.csv")).unwrap()).unwrap();
    let b = read_csv(&fs::read_to_string(dir.path().join("e2/exact.csv")).unwrap()).unwrap();
    assert_eq!(a.rows()[0][5], b.rows()[0][5]);
}

#[test]
fn threshold_at_zero_beta_reports_no_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("comparator = \"annealed\"\n[model]\nname = \"sbm\"\nbeta = 0.0\nd = 3\n[grid]\nparam = \"d\"\nvalues = [3, 4, 6]\n{SMALL_BUDGET}");
    fs::write(dir.path().join("t.toml"), cfg).unwrap();
    let o = run(
        dir.path(),
        &["threshold", "--config", "t.toml", "--out", "out", "--quiet"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("out/manifest.json"));
    assert!(m["summary"]["bracket"].is_null());
    let t = read_csv(&fs::read_to_string(dir.path().join("out/threshold.csv")).unwrap()).unwrap();
    assert_eq!(t.rows().len(), 3);
    assert!(t.rows().iter().all(|r| r[9] == "false"));
}

#[test]
fn selftest_subset_writes_one_row_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["selftest", "--criteria", "1,3", "--out", "out"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("[PASS]  1") && stdout.contains("[PASS]  3"),
        "{stdout}"
    );
    let t = read_csv(&fs::read_to_string(dir.path().join("out/selftest.csv")).unwrap()).unwrap();
    assert!(t.rows().iter().all(|r| r[6] == "true"));
    assert!(t.rows().iter().any(|r| r[0] == "1") && t.rows().iter().any(|r| r[0] == "3"));
}

#[test]
fn workers_env_var_sets_the_pool_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .current_dir(dir.path())
        .args([
            "check", "--model", "ldgm", "--eta", "0.2", "--d", "2", "--k", "2", "--out", "out",
            "--quiet",
        ])
        .env("FACTOR_CAVITY_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("out/manifest.json"))["workers"], 3);
}
