use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smmt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smmt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

// Nodes 0→1→2 with edge vars 1, 2 and reachability 3; clause 1 ∨ 2.
const SAT_INSTANCE: &str = "\
p smmt 3 2
1 2 0
3 0
digraph 0 3
edge 0 0 1 1
edge 0 1 2 2
reach 0 0 2 3
";

// Same graph, reachability asserted while the second hop is off.
const UNSAT_INSTANCE: &str = "\
p smmt 3 2
-2 0
3 0
digraph 0 3
edge 0 0 1 1
edge 0 1 2 2
reach 0 0 2 3
";

#[test]
fn solve_reports_sat_with_model_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sat.smmt"), SAT_INSTANCE).unwrap();
    let out = smmt(&["solve", "sat.smmt"], dir.path());
    assert_eq!(code(&out), 10);
    let text = stdout(&out);
    assert!(text.contains("s SATISFIABLE"));
    let v: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with('v'))
        .flat_map(|l| l.split_whitespace().skip(1))
        .collect();
    assert_eq!(v, ["1", "2", "3", "0"]);
}

#[test]
fn prove_then_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unsat.smmt"), UNSAT_INSTANCE).unwrap();
    let out = smmt(&["prove", "unsat.smmt", "-o", "proof"], dir.path());
    assert_eq!(code(&out), 20, "{}", String::from_utf8_lossy(&out.stderr));
    for ext in ["final.cnf", "drat", "cert", "report"] {
        assert!(dir.path().join(format!("proof/unsat.{ext}")).exists(), "{ext}");
    }
    let drat = fs::read_to_string(dir.path().join("proof/unsat.drat")).unwrap();
    assert!(drat.lines().all(|l| !l.starts_with('t')));
    let cert = fs::read_to_string(dir.path().join("proof/unsat.cert")).unwrap();
    assert!(cert.lines().any(|l| l.starts_with('t')));

    let out = smmt(&["check", "proof/unsat.final.cnf", "proof/unsat.drat"], dir.path());
    assert_eq!(code(&out), 0);

    let truncated: String = drat.lines().take(drat.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("short.drat"), truncated).unwrap();
    let out = smmt(&["check", "proof/unsat.final.cnf", "short.drat"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn trimming_can_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("u.smmt"), UNSAT_INSTANCE).unwrap();
    let out = smmt(&["prove", "u.smmt", "-o", ".", "--no-backward-check"], dir.path());
    assert_eq!(code(&out), 20);
    let out = smmt(&["check", "u.final.cnf", "u.drat"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn generated_benchmarks_prove_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = smmt(
        &["gen-bench", "--seed", "5", "--layers", "2", "--width", "6", "--count", "2", "-o", "bench"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let manifest = fs::read_to_string(dir.path().join("bench/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 3);
    for name in ["net_s5", "net_s6"] {
        let inst = format!("bench/{name}.smmt");
        assert_eq!(code(&smmt(&["solve", &inst], dir.path())), 20);
        assert_eq!(code(&smmt(&["prove", &inst, "-o", "out"], dir.path())), 20);
        let cnf = format!("out/{name}.final.cnf");
        let drat = format!("out/{name}.drat");
        assert_eq!(code(&smmt(&["check", &cnf, &drat], dir.path())), 0);
    }
}

#[test]
fn generation_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&smmt(&["gen-bench", "--seed", "9", "-o", out], dir.path())), 0);
    }
    let a = fs::read(dir.path().join("a/net_s9.smmt")).unwrap();
    let b = fs::read(dir.path().join("b/net_s9.smmt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bitblast_agrees_with_solve() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("u.smmt"), UNSAT_INSTANCE).unwrap();
    assert_eq!(code(&smmt(&["bitblast", "u.smmt", "-o", "u.cnf"], dir.path())), 0);
    let cnf = fs::read_to_string(dir.path().join("u.cnf")).unwrap();
    assert!(cnf.starts_with("p cnf"));
    let f = smmt_core::parse_dimacs(&cnf).unwrap();
    assert!(smmt_core::solve_cnf(&f, Default::default()).is_unsat());
}

#[test]
fn exit_codes_for_bad_usage() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&smmt(&["solve", "missing.smmt"], dir.path())), 2);
    assert_eq!(code(&smmt(&["frobnicate"], dir.path())), 2);
    fs::write(dir.path().join("bad.smmt"), "p smmt 1 1\n2 0\n").unwrap();
    assert_eq!(code(&smmt(&["solve", "bad.smmt"], dir.path())), 2);
    assert_eq!(code(&smmt(&["gen-bench", "--width", "1", "-o", "x"], dir.path())), 2);
}
