use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reduchain"));
    c.env_remove("REDUCHAIN_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn validate_det_prints_witness() {
    let d = tempfile::tempdir().unwrap();
    let f = file(d.path(), "nd.smn", "0 p 1 => 0 q 1\n0 p 1 => 1 q 0\n");
    let o = run(&["validate", "det", "--input", &f]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("⟨0|p|1⟩"));
    let o = run(&["validate", "lp", "--input", &f]);
    assert_eq!(code(&o), 0);
    let o = run(&["validate", "simple", "--input", &f]);
    assert_eq!(code(&o), 1);
}

#[test]
fn solve_and_check_su() {
    let d = tempfile::tempdir().unwrap();
    let pos = file(d.path(), "pos.su", "a <= a -> a\na <= a -> a -> a\n");
    let o = run(&["solve", "su", "--instance", &pos, "--depth", "1"]);
    assert_eq!(code(&o), 0);
    let sol = file(d.path(), "sol", &stdout(&o));
    assert_eq!(code(&run(&["check-solution", "su", "--instance", &pos, "--solution", &sol])), 0);

    let neg = file(d.path(), "neg.su", "a -> a <= a\n");
    assert_eq!(code(&run(&["solve", "su", "--instance", &neg, "--depth", "4"])), 1);
    let bad = file(d.path(), "bad", "a = b -> b\n");
    assert_eq!(code(&run(&["check-solution", "su", "--instance", &neg, "--solution", &bad])), 1);
}

#[test]
fn ssu_examples_through_cli() {
    let d = tempfile::tempdir().unwrap();
    let yes = file(d.path(), "yes.ssu", "0 alpha beta 1\n");
    let o = run(&["solve", "ssu", "--instance", &yes, "--depth", "1"]);
    assert_eq!(code(&o), 0);
    let sol = file(d.path(), "sol", &stdout(&o));
    assert_eq!(code(&run(&["check-solution", "ssu", "--instance", &yes, "--solution", &sol])), 0);
    let triple = file(d.path(), "triple", "phi beta = beta1 -> beta2\npsi0 alpha = beta2\n");
    assert_eq!(code(&run(&["check-solution", "ssu", "--instance", &yes, "--solution", &triple])), 0);
    let no = file(d.path(), "no.ssu", "0 alpha alpha 1\n");
    assert_eq!(code(&run(&["solve", "ssu", "--instance", &no, "--depth", "4"])), 1);
}

#[test]
fn reduce_all_writes_seven_files() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "empty.mm2", "");
    let out = d.path().join("out");
    let o = run(&["reduce", "all", "--input", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        ["01-mm2.mm2", "02-cm1.cm1", "03-smndl.smn", "04-cssm.cssm", "05-ssu.ssu", "06-ru2.ru2", "07-su.su"]
    );
    let su = out.join("07-su.su");
    assert_eq!(code(&run(&["solve", "su", "--instance", su.to_str().unwrap(), "--depth", "0"])), 0);
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "empty.mm2", "");
    let out = d.path().join("env-out");
    let o = bin().args(["reduce", "mm2-cm1", "--input", &m]).env("REDUCHAIN_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("02-cm1.cm1").exists());
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn stepwise_matches_all_and_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "loop.mm2", "inc0\ndec0 0\n");
    let all = d.path().join("all");
    let all2 = d.path().join("all2");
    for (dir, target) in [(&all, "su"), (&all2, "su")] {
        let o = run(&["reduce", "all", "--input", &m, "--out", dir.to_str().unwrap(), "--a0", "1", "--b0", "1", "--target", target]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(read_all(&all), read_all(&all2));

    let step = d.path().join("step");
    let s = step.to_str().unwrap();
    let chain = [
        ("mm2-cm1", m.clone()),
        ("cm1-smn", format!("{s}/02-cm1.cm1")),
        ("smn-cssm", format!("{s}/03-smndl.smn")),
        ("cssm-ssu", format!("{s}/04-cssm.cssm")),
        ("ssu-ru2", format!("{s}/05-ssu.ssu")),
        ("ru2-su", format!("{s}/06-ru2.ru2")),
        ("ru2-lu2", format!("{s}/06-ru2.ru2")),
    ];
    for (kind, input) in chain {
        let o = run(&["reduce", kind, "--input", &input, "--out", s, "--a0", "1", "--b0", "1"]);
        assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let lu2 = d.path().join("lu2");
    let o = run(&["reduce", "all", "--input", &m, "--out", lu2.to_str().unwrap(), "--a0", "1", "--b0", "1", "--target", "lu2"]);
    assert_eq!(code(&o), 0);
    let stepped = read_all(&step);
    for (name, bytes) in read_all(&all).into_iter().chain(read_all(&lu2)) {
        if name == "01-mm2.mm2" {
            continue;
        }
        let got = stepped.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("{name} missing"));
        assert!(got.1 == bytes, "{name} differs between stepwise and whole-chain runs");
    }
}

#[test]
fn json_reports() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "loop.mm2", "inc0\ndec0 0\n");
    let out = d.path().join("o");
    let o = run(&["--json", "reduce", "all", "--input", &m, "--out", out.to_str().unwrap(), "--a0", "1", "--b0", "1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exit"], 0);
    assert_eq!(v["cssm_verdict"], "growth");
    assert_eq!(v["stages"].as_array().unwrap().len(), 7);
    let stages = v["stages"].as_array().unwrap();
    for w in stages.windows(2) {
        assert_eq!(w[1]["input_digest"], w[0]["output_digest"]);
    }

    let f = file(d.path(), "ub.smn", "0 p - => - q 1\n- q 1 => 0 p -\n");
    let o = run(&["--json", "probe-bound", "--input", &f, "--max-len", "4", "--node-cap", "1000"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "plateau(2)");

    let o = run(&["--json", "validate", "det", "--input", "/nonexistent/x.smn"]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exit"], 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let garbage = file(d.path(), "g.mm2", "jump 3\n");
    assert_eq!(code(&run(&["simulate", "mm2", "--input", &garbage, "--fuel", "3"])), 2);
    let nd = file(d.path(), "nd.smn", "0 p 1 => 0 q 1\n0 p 1 => 1 q 0\n");
    let out = d.path().join("o");
    assert_eq!(code(&run(&["reduce", "smn-cssm", "--input", &nd, "--out", out.to_str().unwrap()])), 3);
    let grow = file(d.path(), "g.smn", "00 p - => 0 p 0\n");
    assert_eq!(code(&run(&["probe-bound", "--input", &grow, "--max-len", "3", "--node-cap", "10"])), 0);
    let bad = file(d.path(), "bad.smn", "0 p - => 00 p -\n");
    assert_eq!(code(&run(&["probe-bound", "--input", &bad, "--max-len", "3", "--node-cap", "10"])), 3);
    assert_eq!(code(&run(&["validate", "confluence", "--input", &bad])), 3);
}

#[test]
fn simulate_models() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "loop.mm2", "inc0\ndec0 0\n");
    let o = run(&["simulate", "mm2", "--input", &m, "--config", "0 1 1", "--fuel", "100"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("cycle"));
    let o = run(&["simulate", "mm2", "--input", &file(d.path(), "i.mm2", "inc0\n"), "--fuel", "10"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("halted after 1 steps at (1, (1, 0))"));

    let c = file(d.path(), "loop.cm1", "1 1\n0 2\n");
    let o = run(&["simulate", "cm1", "--input", &c, "--fuel", "5", "--trace"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("(0, 1)\n(1, 2)\n(0, 3)\n(1, 6)\n(0, 9)\n(1, 18)\n"));

    let s = file(d.path(), "ub.smn", "0 p - => - q 1\n- q 1 => 0 p -\n");
    let o = run(&["simulate", "smn", "--input", &s, "--config", "0 p -", "--fuel", "10", "--trace"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("⟨ε|q|1⟩"));
    assert_eq!(code(&run(&["simulate", "smn", "--input", &s, "--fuel", "10"])), 2);
}

#[test]
fn provenance_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let c = file(d.path(), "m.cm1", "5 1\n");
    let out = d.path().join("o");
    let o = run(&["reduce", "cm1-smn", "--input", &c, "--out", out.to_str().unwrap(), "--emit-provenance"]);
    assert_eq!(code(&o), 0);
    let prov = fs::read_to_string(out.join("03-smndl.provenance")).unwrap();
    assert!(prov.starts_with("# index group source\n"));
    assert!(fs::read_to_string(out.join("03-smndl.smx")).unwrap().contains(" swap\n"));
}
