use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SCHEMA: &str = "\
taxonomy NewT (Any(Bacteria(Ecoli,Staph)))
taxonomy ATC (ATC(J01(J01CA,J01DD)))
taxonomy SIR (Any(Tested(Sensitive,Resistant),Not-tested))
eventtype T ATC
eventtype B NewT
reltype B T SIR
";

const DATA: &str = "\
seq 1
e T J01CA
ts
e B Ecoli
r 2 1 Resistant
end
seq 2
e T J01CA
ts
e B Ecoli
r 2 1 Resistant
end
seq 3
e B Staph
end
";

fn rasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rasp")).args(args).output().unwrap()
}

fn write_inputs(dir: &Path) -> (String, String) {
    let schema = dir.join("schema.txt");
    let data = dir.join("data.txt");
    fs::write(&schema, SCHEMA).unwrap();
    fs::write(&data, DATA).unwrap();
    (schema.to_str().unwrap().into(), data.to_str().unwrap().into())
}

#[test]
fn mine_writes_sorted_pattern_file() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, data) = write_inputs(dir.path());
    let out = dir.path().join("patterns.txt");
    let report = dir.path().join("report.json");
    let res = rasp(&[
        "mine", "--schema", &schema, "--data", &data, "--min-support", "2",
        "--out", out.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "2\t0.6667\tB(Ecoli)\n2\t0.6667\tT(J01CA)\n2\t0.6667\tT(J01CA) ; B(Ecoli) | r(2,1)=[Resistant]\n"
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["input"]["sequences"], 3);
    assert_eq!(report["params"]["min_support"], 2);
    assert_eq!(report["refined_patterns"], 3);
    assert_eq!(report["complete"], true);
    assert!(report["type_stage_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fractional_support_and_relationship_only() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, data) = write_inputs(dir.path());
    let res = rasp(&["mine", "--schema", &schema, "--data", &data, "--min-support", "0.5", "--relationship-only"]);
    assert!(res.status.success());
    assert_eq!(
        String::from_utf8(res.stdout).unwrap(),
        "3\t1.0000\tB(Any)\n2\t0.6667\tT(ATC)\n2\t0.6667\tT(ATC) ; B(Any) | r(2,1)=[Resistant]\n"
    );
}

#[test]
fn identical_output_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let res = rasp(&["generate", "--seed", "5", "--sequences", "150", "--out-dir", gen.to_str().unwrap()]);
    assert!(res.status.success());
    let schema = gen.join("schema.txt");
    let data = gen.join("data.txt");
    let run = |threads: &str| {
        let res = rasp(&[
            "mine", "--schema", schema.to_str().unwrap(), "--data", data.to_str().unwrap(),
            "--min-support", "0.1", "--max-gap", "3", "--threads", threads,
        ]);
        assert!(res.status.success());
        res.stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn generate_is_deterministic_and_accepts_zero_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let res = rasp(&[
            "generate", "--seed", "42", "--sequences", "30", "--out-dir", d.to_str().unwrap(),
            "--plant", "A(A.1) ; B(B.2)@0.5",
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for f in ["schema.txt", "data.txt", "TA.tax", "Rel.tax"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let empty = dir.path().join("empty");
    assert!(rasp(&["generate", "--seed", "1", "--sequences", "0", "--out-dir", empty.to_str().unwrap()]).status.success());
    let res = rasp(&[
        "stats", "--schema", empty.join("schema.txt").to_str().unwrap(),
        "--data", empty.join("data.txt").to_str().unwrap(),
    ]);
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("sequences: 0\nevents: 0\n"));
}

#[test]
fn stats_histogram_sums_to_sequence_count() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, data) = write_inputs(dir.path());
    let res = rasp(&["stats", "--schema", &schema, "--data", &data]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("sequences: 3\n"));
    let total: usize = text
        .lines()
        .skip_while(|l| !l.starts_with("histogram"))
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 3);
}

#[test]
fn infeasible_threshold_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, data) = write_inputs(dir.path());
    let res = rasp(&["mine", "--schema", &schema, "--data", &data, "--min-support", "0"]);
    assert_eq!(res.status.code(), Some(2));
    let res = rasp(&["mine", "--schema", &schema, "--data", &data, "--min-support", "0.0"]);
    assert_eq!(res.status.code(), Some(2));
    let res = rasp(&["generate", "--seed", "1", "--out-dir", dir.path().join("g").to_str().unwrap(),
        "--fixed-events", "1", "--plant", "A(A) ; A(A)@0.5"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_with_one_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, _) = write_inputs(dir.path());
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "seq 1\ne T J01CA\ne X foo\nend\n").unwrap();
    let res = rasp(&["mine", "--schema", &schema, "--data", bad.to_str().unwrap(), "--min-support", "1"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}
