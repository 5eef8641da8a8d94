use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cdd-chc"));
    c.env_remove("CDD_CHC_EXTERNAL_CMD");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_prints_a_solution_that_validates() {
    let dir = tempfile::tempdir().unwrap();
    let doubled_abs = fixture("doubled_abs.smt2");
    let o = run(&["solve", doubled_abs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("sat\n"));
    assert_eq!(out.matches("(define-fun").count(), 6);
    let sol = dir.path().join("sol.smt2");
    fs::write(&sol, &out).unwrap();
    let o = run(&["validate", doubled_abs.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "valid\n"));
    fs::write(&sol, out.replace("(>= main!1 0)", "(>= main!1 1)")).unwrap();
    let o = run(&["validate", doubled_abs.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "invalid 7\n"));
    fs::write(&sol, "(define-fun main ((n Int) (r Int)) Bool (>= r 0))").unwrap();
    let o = run(&["validate", doubled_abs.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn classify_reports_labels() {
    let o = run(&["classify", fixture("doubled_abs.smt2").to_str().unwrap()]);
    assert_eq!(stdout(&o), "recursion-free cdd\n");
    let o = run(&["classify", fixture("counter_safe.smt2").to_str().unwrap()]);
    assert_eq!(stdout(&o), "recursive\n");
}

#[test]
fn recursive_counter_refutes_at_depth_three() {
    let f = fixture("counter_unsafe.smt2");
    let o = run(&["solve", f.to_str().unwrap(), "--kmax", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("unsat\n(depth 3)\n"), "{}", out);
    assert!(out.contains("(derivation (3 (2 (2 (2 (1))))))"), "{}", out);
    let o = run(&["solve", f.to_str().unwrap(), "--kmax", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o), "unknown\n");
    let o = run(&["solve", fixture("counter_safe.smt2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn errors_exit_with_three_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.smt2");
    fs::write(&bad, "(set-logic HORN)\n(declare-fun P (Int) Bool)\n(assert (forall ((x Int)) (=> (P x x) false)))\n").unwrap();
    let o = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).is_empty());
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{}", err);
    assert!(err.contains("3:31"), "{}", err);
    assert_eq!(run(&["solve"]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "backend = \"quantum\"\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    // backend settings are checked before the input is read
    let o = run(&["--backend", "external", "solve", "/nonexistent.smt2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("external backend needs a command"));
}

#[test]
fn external_backend_answers_are_never_trusted_blindly() {
    let doubled_abs = fixture("doubled_abs.smt2");
    // a solver that knows nothing
    let o = bin()
        .args(["solve", doubled_abs.to_str().unwrap(), "--backend", "external"])
        .env("CDD_CHC_EXTERNAL_CMD", "sh -c 'cat>/dev/null;echo unknown'")
        .output()
        .unwrap();
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(2), "unknown\n"), "{}", stderr(&o));
    let o = run(&[
        "solve",
        doubled_abs.to_str().unwrap(),
        "--backend",
        "external",
        "--external-cmd",
        r#"sh -c "cat>/dev/null;echo unsat;echo '((>= L4!1 7))'""#,
    ]);
    // the bogus interpolant fails the independent check
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("violates"), "{}", stderr(&o));
    // builtin with an external fallback never consults it on this input
    let o = run(&["solve", doubled_abs.to_str().unwrap(), "--external-cmd", "/nonexistent/solver", "--timeout-ms", "50"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn trace_and_expansion_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("dd.chc");
    fs::write(
        &sys,
        "pred A Int\npred B Int\npred C Int\npred D Int\nA(x) <- [] ; (= x 0)\nB(x) <- [A(x)] ; true\nC(x) <- [A(x)] ; true\nD(x) <- [B(x), C(x)] ; true\nfalse <- [D(x)] ; (< x 0)\n",
    )
    .unwrap();
    let trace = dir.path().join("trace.json");
    let dump = dir.path().join("exp.chc");
    let o = run(&[
        "solve",
        sys.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--dump-expansion",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t.as_array().unwrap().len(), 5);
    let dumped = fs::read_to_string(&dump).unwrap();
    assert!(dumped.contains("# A!1 -> A"), "{}", dumped);
    let o = run(&["classify", dump.to_str().unwrap()]);
    assert!(stdout(&o).contains(" cdd"), "{}", stdout(&o));
    let o = run(&["expand", sys.to_str().unwrap()]);
    assert_eq!(stdout(&o), dumped);
    let o = run(&["oracle", sys.to_str().unwrap()]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "solvable\n"));
}

#[test]
fn oracle_prints_the_derivation() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("u.smt2");
    let text = fs::read_to_string(fixture("doubled_abs.smt2")).unwrap().replace("(< res 0)", "(= res 2)");
    fs::write(&f, text).unwrap();
    let o = run(&["oracle", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("unsolvable\n(8)\n"), "{}", out);
    let o = run(&["solve", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("unsat\n(derivation (8 (7"), "{}", stdout(&o));
}

#[test]
fn bench_sizes_emits_json_lines() {
    let o = run(&["bench-sizes", "--diamond", "3", "--seed", "5", "--profile", "cdd", "--count", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2]["derivations"], 8);
    assert_eq!(rows[3]["name"], "cdd-5");
    assert_eq!(run(&["bench-sizes"]).status.code(), Some(3));
}
