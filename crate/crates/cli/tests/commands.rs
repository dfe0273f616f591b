use std::path::Path;
use std::process::{Command, Output};

use maxtoll::generators::{fixture_fig7, gen_z_mod};
use maxtoll_cli::{parse_instance, parse_solution, serialize_instance};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxtoll"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn fig7_file(dir: &TempDir) -> String {
    write(dir, "fig7.mt", &serialize_instance(&fixture_fig7()))
}

#[test]
fn solve_reports_worked_example() {
    let dir = TempDir::new().unwrap();
    let inst = fig7_file(&dir);
    let out = run(&["solve", &inst]);
    assert!(out.status.success());
    let text = stdout(&out);
    for line in ["revenue 9/1", "lp 10/1", "guarantee 2/1", "toll T1 1/1", "toll T2 8/1"] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
    // identical bytes on a second run
    assert_eq!(stdout(&run(&["solve", &inst])), text);
}

#[test]
fn verify_accepts_solution_and_rejects_tampering() {
    let dir = TempDir::new().unwrap();
    let inst = fig7_file(&dir);
    let sol = stdout(&run(&["solve", &inst]));
    let good = write(&dir, "good.mts", &sol);
    let out = run(&["verify", &inst, &good]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "consistent\n");

    // T2 is saturated; one more unit breaks consistency
    let bad = write(&dir, "bad.mts", &sol.replace("toll T2 8/1", "toll T2 9/1"));
    let out = run(&["verify", &inst, &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), "inconsistent\n");
}

#[test]
fn verify_rejects_wrong_revenue_claim() {
    let dir = TempDir::new().unwrap();
    let inst = fig7_file(&dir);
    let sol = stdout(&run(&["solve", &inst])).replace("revenue 9/1", "revenue 10/1");
    let out = run(&["verify", &inst, &write(&dir, "claim.mts", &sol)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn alpha_is_exact() {
    assert_eq!(stdout(&run(&["alpha", "--k", "4"])), "2\n");
    assert_eq!(stdout(&run(&["alpha", "--k", "3"])), "7/4\n");
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["alpha", "--k", "5", "--json"]))).unwrap();
    assert_eq!(json["alpha"], "17/8");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["alpha"]).status.code(), Some(2));
}

#[test]
fn bad_input_exits_one_with_line() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "bad.mt", "maxtoll 1\nsource s\nsink t\narc a s t oops F\n");
    let out = run(&["solve", &inst]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    let missing = run(&["bound", Path::new("/nonexistent/x.mt").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn gen_then_solve_reproduces_metadata() {
    let dir = TempDir::new().unwrap();
    let text = stdout(&run(&["gen", "z-mod", "--k", "4"]));
    assert!(text.contains("# expected opt 12/1"));
    assert!(text.contains("# expected app 8/1"));
    let net = parse_instance(&text).unwrap();
    assert_eq!(net, gen_z_mod(4).0);
    let inst = write(&dir, "z4.mt", &text);
    let exact = parse_solution(&stdout(&run(&["exact", &inst]))).unwrap();
    assert_eq!(exact.revenue, Some(maxtoll::int(12)));
    let approx = parse_solution(&stdout(&run(&["solve", &inst]))).unwrap();
    assert_eq!(approx.revenue, Some(maxtoll::int(8)));
}

#[test]
fn gen_sat_from_dimacs() {
    let dir = TempDir::new().unwrap();
    let cnf = write(&dir, "f.cnf", "c example\np cnf 4 3\n1 2 -3 0\n-2 3 -4 0\n-1 3 4 0\n");
    let out = run(&["gen", "sat", "--cnf", &cnf]);
    assert!(out.status.success());
    let inst = write(&dir, "sat.mt", &stdout(&out));
    let exact = parse_solution(&stdout(&run(&["exact", &inst]))).unwrap();
    assert_eq!(exact.revenue, Some(maxtoll::int(7)));

    let two = write(&dir, "two.cnf", "p cnf 2 1\n1 2 0\n");
    assert_eq!(run(&["gen", "sat", "--cnf", &two]).status.code(), Some(1));
}

#[test]
fn random_gen_is_seeded() {
    let a = stdout(&run(&["gen", "random", "--seed", "11", "--p-toll", "2/3"]));
    let b = stdout(&run(&["gen", "random", "--seed", "11", "--p-toll", "2/3"]));
    let c = stdout(&run(&["gen", "random", "--seed", "12", "--p-toll", "2/3"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn bound_and_json_mirror() {
    let dir = TempDir::new().unwrap();
    let inst = fig7_file(&dir);
    assert_eq!(stdout(&run(&["bound", &inst])), "lp 10/1\nl0 0/1\nlinf 10/1\n");
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["solve", &inst, "--json"]))).unwrap();
    assert_eq!(json["revenue"], "9/1");
    assert_eq!(json["tolls"]["T2"], "8/1");
    assert_eq!(json["recursion_calls"], 3);
}

#[test]
fn bench_table_shows_gap() {
    let out = stdout(&run(&["bench", "z", "--max-k", "4"]));
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "instance m lp app opt lp/app lp/opt alpha");
    assert_eq!(rows[4], "k=4 4 16 8 8 2 2 2");
}
