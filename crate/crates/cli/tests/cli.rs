use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use r1cs_equiv_bench::{solution_set_equivalent, transform, Category, TransformSpec};
use r1cs_paradigm::parse_r1cs;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_r1cs-paradigm"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const UNMERGED: &str = r#"{"prime": "101", "num_vars": 4, "constraints": [
    {"a": {"0": "1", "1": "1"}, "b": {"0": "1"}, "c": {"2": "1"}},
    {"a": {"1": "1", "2": "1"}, "b": {"0": "1"}, "c": {"3": "1"}}]}"#;
const MERGED: &str = r#"{"prime": "101", "num_vars": 3, "constraints": [
    {"a": {"0": "1", "1": "2"}, "b": {"0": "1"}, "c": {"2": "1"}}]}"#;

#[test]
fn normalize_reproduces_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = run(&["normalize", golden("vitalik.json").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(golden("vitalik_paradigm.json")).unwrap());
}

#[test]
fn normalize_is_deterministic_and_writes_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let input = golden("vitalik.json");
    let o = run(&[
        "normalize",
        input.to_str().unwrap(),
        "--map",
        &p("map.json"),
        "--dump-dfg",
        &p("dfg.dot"),
        "--dump-tiles",
        &p("tiles.json"),
        "--dump-abstract",
        &p("abs.dot"),
        "--trace-pagerank",
        &p("pr.csv"),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, fs::read(golden("vitalik_paradigm.json")).unwrap());
    assert_eq!(run(&["normalize", input.to_str().unwrap()]).stdout, o.stdout);
    let map: serde_json::Value = serde_json::from_slice(&fs::read(p("map.json")).unwrap()).unwrap();
    assert_eq!(map["map"]["5"], "eliminated");
    assert!(fs::read_to_string(p("dfg.dot")).unwrap().starts_with("digraph"));
    assert!(fs::read_to_string(p("abs.dot")).unwrap().starts_with("digraph"));
    serde_json::from_slice::<serde_json::Value>(&fs::read(p("tiles.json")).unwrap()).unwrap();
    assert!(fs::read_to_string(p("pr.csv")).unwrap().starts_with("iteration,node,pr\n"));
}

#[test]
fn normalize_empty_system() {
    let dir = tempfile::tempdir().unwrap();
    let f = put(dir.path(), "empty.json", r#"{"prime": "7", "num_vars": 1, "constraints": []}"#);
    let o = run(&["normalize", &f]);
    assert_eq!(code(&o), 0);
    let out = parse_r1cs(&o.stdout).unwrap();
    assert_eq!((out.num_vars, out.constraints.len()), (1, 0));
}

#[test]
fn bad_input_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = put(
        dir.path(),
        "garbage.json",
        r#"{"prime": "7", "num_vars": 2, "constraints": [{"a": {"x1": "1"}, "b": {}, "c": {}}]}"#,
    );
    let o = run(&["normalize", &f]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("x1"));
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["normalize", missing.to_str().unwrap()])), 3);
    let out = dir.path().join("no/such/dir/out.json");
    assert_eq!(code(&run(&["normalize", golden("vitalik.json").to_str().unwrap(), "-o", out.to_str().unwrap()])), 3);
}

#[test]
fn check_equal_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut reversed = parse_r1cs(&fs::read(golden("vitalik.json")).unwrap()).unwrap();
    reversed.constraints.reverse();
    let rev = put(d, "rev.json", &r1cs_paradigm::serialize_r1cs(&reversed));
    assert_eq!(code(&run(&["check-equal", golden("vitalik.json").to_str().unwrap(), &rev])), 0);

    let (u, m) = (put(d, "u.json", UNMERGED), put(d, "m.json", MERGED));
    assert_eq!(code(&run(&["check-equal", &u, &m])), 0);

    let sq = |extra: &str| {
        format!(r#"{{"prime": "7", "num_vars": 3, "constraints": [{{"a": {{"1": "1"}}, "b": {{"1": "1"}}, "c": {{"2": "1"{extra}}}}}]}}"#)
    };
    let (a, b) = (put(d, "a.json", &sq("")), put(d, "b.json", &sq(r#", "0": "1""#)));
    let o = run(&["check-equal", &a, &b]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("differ at line"));

    let other = put(d, "p11.json", &sq("").replace("\"7\"", "\"11\""));
    assert_eq!(code(&run(&["check-equal", &a, &other])), 2);
}

#[test]
fn gen_bench_writes_equivalent_variants() {
    let dir = tempfile::tempdir().unwrap();
    let base = golden("vitalik.json");
    let out = dir.path().join("vitalik");
    let o = run(&[
        "gen-bench",
        base.to_str().unwrap(),
        "--category",
        "1",
        "--count",
        "5",
        "--seed",
        "42",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let sys = parse_r1cs(&fs::read(&base).unwrap()).unwrap();
    let files: Vec<_> = fs::read_dir(out.join("variants")).unwrap().collect();
    assert_eq!(files.len(), 5);
    for seed in 42..47 {
        let v = parse_r1cs(&fs::read(out.join(format!("variants/1-{seed}.json"))).unwrap()).unwrap();
        let shared = transform(&sys, &TransformSpec::new(Category::VariablePermutation, seed)).unwrap().shared;
        assert_eq!(solution_set_equivalent(&sys, &v, &shared), Ok(true));
    }
    // The generated directory is itself a corpus entry.
    let b = run(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(code(&b), 0, "{}", String::from_utf8_lossy(&b.stdout));
}

#[test]
fn gen_bench_reports_inapplicable_categories() {
    let dir = tempfile::tempdir().unwrap();
    let f = put(dir.path(), "sq.json", r#"{"prime": "7", "num_vars": 3, "constraints": [{"a": {"1": "1"}, "b": {"1": "1"}, "c": {"2": "1"}}]}"#);
    let o = run(&["gen-bench", &f, "--category", "3", "-o", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["gen-bench", &f])), 2);
}

#[test]
fn bench_flags_a_corrupted_variant() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["gen-bench", "-o", dir.path().to_str().unwrap()])), 0);
    let json = dir.path().join("report.json");
    let ok = run(&["bench", dir.path().to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(report["categories"][0]["groups"], 55);

    let victim = dir.path().join("sum4/variants/1-2100.json");
    let mut sys = parse_r1cs(&fs::read(&victim).unwrap()).unwrap();
    let k = sys.prime.elem(2);
    let row = &mut sys.constraints[0];
    let v = row.a.variables().next().unwrap();
    row.a.add_term(v, &k);
    fs::write(&victim, r1cs_paradigm::serialize_r1cs(&sys)).unwrap();
    let bad = run(&["bench", dir.path().to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL sum4 1-2100"));
}

#[test]
fn validate_witness_and_paradigm() {
    let dir = tempfile::tempdir().unwrap();
    let sys = golden("vitalik.json");
    let sys = sys.to_str().unwrap();
    // x = 3: out = 35, sym1 = 9, y = 27, sym2 = 30.
    let good = put(dir.path(), "w.json", r#"{"values": ["1", "3", "35", "9", "27", "30"]}"#);
    let bad = put(dir.path(), "v.json", r#"{"values": ["1", "3", "36", "9", "27", "30"]}"#);
    assert_eq!(code(&run(&["validate", sys, "--witness", &good])), 0);
    assert_eq!(code(&run(&["validate", sys, "--witness", &bad])), 1);
    let short = put(dir.path(), "s.json", r#"{"values": ["1", "3"]}"#);
    assert_eq!(code(&run(&["validate", sys, "--witness", &short])), 2);
    assert_eq!(code(&run(&["validate", golden("vitalik_paradigm.json").to_str().unwrap(), "--paradigm"])), 0);
    assert_eq!(code(&run(&["validate", sys, "--paradigm"])), 1);
}
