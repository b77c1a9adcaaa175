use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn stpack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stpack"))
        .args(args)
        .env_remove("STPACK_SEED")
        .output()
        .expect("spawn stpack")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn gen_regular(out: &str) {
    let o = stpack(&["gen", "--seed", "3", "--out", out, "regular", "-n", "16", "--degree", "3", "-m", "2", "-t", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.inst"), path(&dir, "b.inst"));
    gen_regular(&a);
    gen_regular(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn solve_then_validate() {
    let dir = TempDir::new().unwrap();
    let (inst, sol) = (path(&dir, "g.inst"), path(&dir, "g.sol"));
    gen_regular(&inst);
    let o = stpack(&["solve", &inst, "--variant", "edstp", "--max-iters", "300", "--solution", &sol]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("energy"), "{report}");
    assert!(Path::new(&sol).exists());
    let o = stpack(&["validate", &inst, &sol, "--variant", "edstp"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn kernels_report_equal_energy() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "g.inst");
    gen_regular(&inst);
    let energy = |kernel: &str| {
        let o = stpack(&["solve", &inst, "--variant", "edstp", "--kernel", kernel, "--max-iters", "200"]);
        assert!(o.status.code() != Some(1), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8_lossy(&o.stdout)
            .split_whitespace()
            .filter(|kv| !kv.starts_with("wall_ms=") && !kv.starts_with("kernel="))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(energy("neighocc"), energy("matching"));
}

#[test]
fn flat_matching_is_rejected() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "g.inst");
    gen_regular(&inst);
    let o = stpack(&["solve", &inst, "--variant", "edstp", "--formalism", "flat", "--kernel", "matching"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_and_bad_flags_exit_one() {
    assert_eq!(stpack(&["solve", "/nonexistent/x.inst"]).status.code(), Some(1));
    assert_eq!(stpack(&["solve"]).status.code(), Some(1));
    assert_eq!(stpack(&["--help"]).status.code(), Some(0));
}

#[test]
fn infeasible_solution_exits_two() {
    let dir = TempDir::new().unwrap();
    let (inst, sol) = (path(&dir, "g.inst"), path(&dir, "empty.sol"));
    gen_regular(&inst);
    std::fs::write(&sol, "comm 1\ncomm 2\n").unwrap();
    assert_eq!(stpack(&["validate", &inst, &sol]).status.code(), Some(2));
}

#[test]
fn bench_csv_is_reproducible() {
    let args = [
        "bench", "--graph", "regular", "-n", "16", "--degree", "3", "-m", "2", "-t", "2", "--seeds", "2", "--max-iters",
        "100", "--no-aggregate",
    ];
    let strip = |o: Output| {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(o.stdout).unwrap();
        // Wall time is the last column.
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect::<Vec<_>>()
    };
    let a = strip(stpack(&args));
    let b = strip(stpack(&args));
    assert!(a[0].starts_with("graph,n,degree,m,t,depth"));
    assert_eq!(a.len(), 1 + 2 * 2);
    assert_eq!(a, b);
}
