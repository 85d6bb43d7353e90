use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osp_core::tree::four_type_violation;

fn osp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_prints_trace_and_solution() {
    let o = osp(&["run", "--instance", "sc-parallel", "--table", "thm8", "--profile", "22,10,10"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("solution {0}"), "{s}");
    assert!(s.contains("value 22"), "{s}");
}

#[test]
fn run_accepts_fractions() {
    let o = osp(&["run", "--instance", "sc-parallel", "--table", "thm8", "--profile", "44/2,10,10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ratio_reports_the_witness() {
    let o = osp(&["ratio", "--instance", "sc-parallel", "--table", "thm8"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("worst ratio 11/10"), "{s}");
    assert!(s.contains("witness (22, 10, 10)"), "{s}");
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(code(&osp(&["run", "--instance", "nope", "--profile", "1"])), 2);
    assert_eq!(code(&osp(&["repro", "thm99"])), 2);
    assert_eq!(
        code(&osp(&["run", "--instance", "sc-parallel", "--table", "missing.json", "--profile", "22,10,10"])),
        2
    );
    assert_eq!(code(&osp(&["run", "--instance", "sc-parallel", "--table", "thm8", "--profile", "7,7,7"])), 2);
}

#[test]
fn engine_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(
        dir.path(),
        "table.json",
        r#"{"policy": "fail_on_missing", "entries": [{"agent": 0, "direction": "out", "type": "10", "history": "*", "rank": "3"}]}"#,
    );
    let o = osp(&["run", "--instance", "sc-parallel", "--table", &table, "--engine", "forward", "--profile", "22,10,10"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_osp_passes_and_fails() {
    let o = osp(&["verify-osp", "--instance", "ca-appendixB", "--tree", "ca-appendixB", "--payments"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let (inst, tree) = four_type_violation().unwrap();
    let inst = write(dir.path(), "inst.json", &inst.to_json().unwrap());
    let tree = write(dir.path(), "tree.json", &tree.to_json().unwrap());
    let o = osp(&["verify-osp", "--instance", &inst, "--tree", &tree, "--explain"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("negative cycle"), "{}", stdout(&o));
}

#[test]
fn repro_thm8_and_thm13() {
    let o = osp(&["repro", "thm8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("11/10"));
    let o = osp(&["repro", "thm13", "--k", "4"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn repro_thm11_fails() {
    let o = osp(&["repro", "thm11"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("result: FAIL"));
}

#[test]
fn repro_thm14_prints_every_inequality() {
    let o = osp(&["repro", "thm14", "--k", "1000000"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = stdout(&o);
    for name in ["M1", "M2", "no_interl", "no_interl2", "sum", "red_sum"] {
        assert!(s.contains(name), "{name} missing from\n{s}");
    }
}

#[test]
fn records_are_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = osp(&["repro", "matroid-optimal", "--seed", "11", "--records", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    for line in String::from_utf8(a).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}
