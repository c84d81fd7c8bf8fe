use std::path::{Path, PathBuf};
use std::process::Command;

use fekete_ca::cli::execute;

fn manifest(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel).display().to_string()
}

fn run(args: &[&str]) -> fekete_ca::cli::Execution {
    let args: Vec<String> = std::iter::once("fekete-ca".to_string())
        .chain(args.iter().map(|a| {
            if a.starts_with("descriptions/") {
                manifest(a)
            } else {
                a.to_string()
            }
        }))
        .collect();
    execute(args)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(manifest(&format!("tests/golden/{name}"))).unwrap()
}

const CASES: &[(&[&str], i32, &str)] = &[
    (&["out-table", "descriptions/and1d.toml", "--max-sides", "6"], 0, "out_table_and1d.csv"),
    (&["out-table", "descriptions/shift.toml", "--max-sides", "5"], 0, "out_table_shift.csv"),
    (&["out-table", "descriptions/and2d.toml", "--sides-list", "1x1,2x2,3x3"], 0, "out_table_and2d.csv"),
    (
        &["out-table", "descriptions/and2d.toml", "--sides-list", "1x1,2x2,3x3", "--budget", "2^12"],
        0,
        "out_table_and2d_refused.csv",
    ),
    (&["decide", "descriptions/and1d.toml"], 10, "decide_and1d.txt"),
    (&["decide", "descriptions/shift.toml"], 0, "decide_shift.txt"),
    (&["decide", "descriptions/and2d.toml"], 10, "decide_and2d.txt"),
    (&["decide", "descriptions/and2d.toml", "--budget", "2^10"], 20, "decide_and2d_small_budget.txt"),
    (&["decide", "descriptions/majority3.toml"], 10, "decide_majority3.txt"),
    (&["lambda", "descriptions/xor1d.toml", "--schedule", "diag:1..12"], 0, "lambda_xor1d.txt"),
    (
        &["fekete", "--table", "descriptions/violating_table.toml", "--schedule", "1,2,3"],
        1,
        "fekete_violating.txt",
    ),
    (&["fekete", "--function", "3n", "--schedule", "diag:1..10"], 0, "fekete_3n.txt"),
    (
        &["threshold", "descriptions/and1d.toml", "--k", "1", "--r", "2", "--delta", "0.9", "--box", "24"],
        0,
        "threshold_and1d.txt",
    ),
];

#[test]
fn outputs_match_golden_files() {
    for (args, code, file) in CASES {
        let run = run(args);
        assert_eq!(run.stderr, "", "{args:?}");
        assert_eq!(run.code, *code, "{args:?}");
        assert_eq!(run.stdout, golden(file), "{args:?}");
    }
}

#[test]
fn golden_files_hold_the_known_values() {
    let and1d: Vec<String> = golden("out_table_and1d.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(and1d, ["2", "4", "7", "12", "21", "37"]);
    assert!(golden("out_table_shift.csv")
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(4) == Some("0.0")));
    let and2d = golden("out_table_and2d.csv");
    assert!(and2d.contains("\n3,3,340,512,"));
    assert!(golden("decide_and1d.txt").contains("```\nsides: 3\n101\ncode: 5\n```\n"));
    assert!(golden("decide_and2d.txt").contains("```\nsides: 2 x 3\n101\n010\ncode: 42\n```\n"));
}

#[test]
fn output_is_deterministic() {
    let args = ["lambda", "descriptions/and2d.toml", "--schedule", "diag:1..3", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a, b);
    assert!(a.stdout.contains("seed 7"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = std::env::temp_dir().join(format!("fekete-ca-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("and1d.csv");
    let path_str = path.display().to_string();
    let run = run(&["out-table", "descriptions/and1d.toml", "--max-sides", "6", "--out", &path_str]);
    assert_eq!((run.code, run.stdout.as_str()), (0, ""));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), golden("out_table_and1d.csv"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn builtin_names_stand_in_for_files() {
    assert_eq!(run(&["out-table", "and1d", "--max-sides", "6"]).stdout, golden("out_table_and1d.csv"));
}

#[test]
fn errors_exit_2_and_name_the_problem() {
    let dir = std::env::temp_dir().join(format!("fekete-ca-errors-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "dimension = 1\nstates = 2\nneighborhood = [0, 1]\n[rule]\ntable = [0, 1, 1]\n").unwrap();
    let run_bad = run(&["decide", &bad.display().to_string()]);
    assert_eq!(run_bad.code, 2);
    assert!(run_bad.stderr.starts_with("error: rule.table:"), "{}", run_bad.stderr);

    let partial = dir.join("partial.toml");
    std::fs::write(&partial, "dimension = 1\n[values]\n1 = 1.0\n2 = 2.0\n").unwrap();
    let run_partial = run(&["fekete", "--table", &partial.display().to_string(), "--schedule", "1,2,3"]);
    assert_eq!(run_partial.code, 2);
    assert!(run_partial.stderr.contains("3"), "{}", run_partial.stderr);
    std::fs::remove_dir_all(&dir).unwrap();

    let usage = run(&["lambda", "and1d", "--schedule", "diag:5..1"]);
    assert_eq!(usage.code, 2);
    let missing = run(&["out-table", "and1d"]);
    assert_eq!(missing.code, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fekete-ca");
    for (name, code) in [("shift", 0), ("and1d", 10)] {
        let status = Command::new(bin).args(["decide", name]).output().unwrap();
        assert_eq!(status.status.code(), Some(code), "{name}");
    }
    let status = Command::new(bin)
        .args(["decide", "and2d", "--budget", "2^10"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(20));
    assert_eq!(String::from_utf8(status.stdout).unwrap(), golden("decide_and2d_small_budget.txt"));
}
