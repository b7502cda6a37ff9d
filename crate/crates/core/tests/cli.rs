use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn symdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symdp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stand_in_chain(dir: &Path) -> PathBuf {
    let out = dir.join("chain.json");
    let o = symdp(&[
        "build-chain",
        "--corpus",
        fixture("stand_in_corpus.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).trim(), "states: 50");
    out
}

#[test]
fn online_with_huge_epsilon_echoes() {
    let o = symdp(&[
        "privatize", "--mode", "online", "--epsilon", "1e9", "--k", "1", "--alphabet", "a,b,c",
        "--input", "a b c c a", "--emit-distance",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a b c c a\n0\n");
}

#[test]
fn same_seed_same_output() {
    let run = || {
        stdout(&symdp(&[
            "privatize", "--mode", "offline", "--epsilon", "0.5", "--alphabet", "a,b,c,d",
            "--input", "a b c d a b c d", "--seed", "42",
        ]))
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn markov_offline_output_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let chain_path = stand_in_chain(dir.path());
    let chain = symdp::MarkovChain::from_json(&std::fs::read_to_string(&chain_path).unwrap())
        .unwrap()
        .with_initial_named("anywhere")
        .unwrap();
    for seed in 0..5 {
        let o = symdp(&[
            "privatize", "--mode", "mc-offline", "--epsilon", "1", "--chain", chain_path.to_str().unwrap(),
            "--initial", "anywhere", "--input-file", fixture("input.txt").to_str().unwrap(),
            "--seed", &seed.to_string(),
        ]);
        assert!(o.status.success(), "{o:?}");
        let toks: Vec<String> = stdout(&o).split_whitespace().map(String::from).collect();
        assert!(chain.is_feasible(&chain.encode(&toks).unwrap()));
    }
}

#[test]
fn infeasible_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let chain_path = stand_in_chain(dir.path());
    let o = symdp(&[
        "privatize", "--mode", "mc-offline", "--epsilon", "1", "--chain", chain_path.to_str().unwrap(),
        "--initial", "green", "--input-file", fixture("input.txt").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(symdp(&["privatize", "--mode", "sideways", "--epsilon", "1"]).status.code(), Some(1));
    let o = symdp(&["privatize", "--mode", "online", "--epsilon", "1", "--alphabet", "a,b", "--input", "a z"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown token"));
    assert_eq!(symdp(&["--help"]).status.code(), Some(0));
}

#[test]
fn build_chain_is_idempotent_and_alternates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    std::fs::write(&corpus, "a b a b").unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = symdp(&["build-chain", "--corpus", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(stdout(&o).trim(), "states: 2");
    }
    let ja = std::fs::read(&a).unwrap();
    assert_eq!(ja, std::fs::read(&b).unwrap());
    let chain = symdp::MarkovChain::from_json(std::str::from_utf8(&ja).unwrap()).unwrap();
    assert_eq!(chain.probability(0, 1), 1.0);
    assert_eq!(chain.probability(1, 0), 1.0);
}

#[test]
fn experiment_single_row_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    let o = symdp(&[
        "experiment", "--mode", "online", "--epsilons", "1", "--samples", "1", "--alphabet", "a,b,c",
        "--input", "a b c", "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 12);
    assert_eq!(lines[1].split(',').count(), 12);

    let chain_path = stand_in_chain(dir.path());
    let o = symdp(&[
        "experiment", "--mode", "mc-online", "--epsilons", "0.1,1,10", "--samples", "300",
        "--chain", chain_path.to_str().unwrap(), "--input-file", fixture("input.txt").to_str().unwrap(),
        "--initial", "anywhere", "--initial", "green", "--seed", "3",
    ]);
    assert!(o.status.success(), "{o:?}");
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let mean = |init: &str, eps: f64| -> f64 {
        rows.iter()
            .find(|r| &r[1] == init && r[2].parse::<f64>().unwrap() == eps)
            .unwrap()[10]
            .parse()
            .unwrap()
    };
    assert!(mean("anywhere", 10.0) < 1.0);
    assert!(mean("green", 10.0) > mean("anywhere", 10.0));
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = symdp(&["verify", "--lengths", "1,2", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);

    let o = symdp(&["verify", "--lengths", "2", "--break-tau", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unbounded"));

    let o = symdp(&["verify", "--lengths", "2", "--epsilons", "0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn mnfa_dot_renders() {
    let o = symdp(&["mnfa-dot", "--alphabet", "a,b,c", "--input", "a b c", "--distance", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("digraph"));
}
