use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trial-error"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_subcommand_runs() {
    for (cmd, n) in [
        ("sort", "5"),
        ("sm", "4"),
        ("sat", "6"),
        ("graphiso", "5"),
        ("clique", "6"),
        ("groupiso-reduce", "5"),
        ("core", "2"),
        ("ssum-demo", "2"),
    ] {
        let out = bin(&[cmd, "--n", n, "--reps", "2", "--seed", "4"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = stdout(&out);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("problem,n,m,seed,repetition,oracle,trials,violations,computation_calls,outcome,verified")
        );
        for line in lines {
            assert!(line.starts_with(cmd), "{line}");
            assert!(line.ends_with(",true"), "{line}");
        }
    }
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let args = [
        "sort", "--n", "6", "--oracle", "random", "--reps", "20", "--seed", "9",
    ];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&[
        "sort", "--n", "6", "--oracle", "random", "--reps", "20", "--seed", "10",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn kahn_saks_rows_respect_the_bound() {
    let out = bin(&["sort", "--n", "6", "--oracle", "kahn-saks", "--reps", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        // ⌈log_{11/8} 720⌉ + 1
        assert!(row[6].parse::<usize>().unwrap() <= 22);
        assert_eq!(&row[9], "solved");
    }
}

#[test]
fn json_mirrors_csv_columns() {
    let out = bin(&["sm", "--n", "4", "--reps", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let keys: Vec<&str> = rows[0]
        .as_object()
        .unwrap()
        .keys()
        .map(|k| k.as_str())
        .collect();
    assert!(keys.contains(&"computation_calls") && keys.contains(&"verified"));
    assert!(!keys.contains(&"wall_ms"));
}

#[test]
fn timing_adds_a_column() {
    let out = bin(&["sort", "--n", "4", "--timing"]);
    assert!(stdout(&out).lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn budget_exhaustion_exits_with_2() {
    let out = bin(&["sat", "--n", "6", "--oracle", "block", "--budget", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("budget_exhausted"));
}

#[test]
fn input_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"order\": [0, 1,\n 2,, 3]}").unwrap();
    let out = bin(&["sort", "--instance", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");

    assert_eq!(bin(&["sort", "--oracle", "block"]).status.code(), Some(3));
    assert_eq!(bin(&["groupiso-reduce", "--n", "6"]).status.code(), Some(3));
    assert_eq!(bin(&["sort", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(
        bin(&["sat", "--instance", "/nonexistent.cnf"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn dry_run_validates_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("rows.csv");
    let out = bin(&[
        "clique",
        "--n",
        "8",
        "--k",
        "3",
        "--dry-run",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(!out_file.exists());
    assert_eq!(
        bin(&["clique", "--n", "8", "--k", "9", "--dry-run"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn instance_files_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    fs::write(&cnf, "p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
    let out = bin(&["sat", "--instance", path(&cnf), "--reps", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.lines().skip(1).all(|l| l.starts_with("sat,3,2,")),
        "{text}"
    );

    let graph = dir.path().join("c5.json");
    fs::write(
        &graph,
        r#"{"graph": {"n": 5, "edges": [[0,1],[1,2],[2,3],[3,4],[4,0]]}}"#,
    )
    .unwrap();
    let out = bin(&["groupiso-reduce", "--graph", path(&graph)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains(",cycle,true"));
}

#[test]
fn audit_passes_honest_runs_and_catches_a_forged_yes() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let out = bin(&["sort", "--n", "5", "--reps", "3", "--transcript", path(&t)]);
    assert_eq!(out.status.code(), Some(0));
    let audit = bin(&["audit", "--transcript", path(&t)]);
    assert_eq!(audit.status.code(), Some(0));
    assert_eq!(
        stdout(&audit)
            .lines()
            .filter(|l| l.starts_with("PASS"))
            .count(),
        3
    );

    // Turn the first violation of the first run into a Yes.
    let mut file: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&t).unwrap()).unwrap();
    let entries = file["runs"][0]["entries"].as_array_mut().unwrap();
    let idx = entries.iter().position(|e| e["feedback"] != "yes").unwrap();
    entries[idx]["feedback"] = serde_json::json!("yes");
    entries.truncate(idx + 1);
    fs::write(&t, serde_json::to_string(&file).unwrap()).unwrap();
    let audit = bin(&["audit", "--transcript", path(&t)]);
    assert_eq!(audit.status.code(), Some(1));
    let first = stdout(&audit).lines().next().unwrap().to_string();
    assert!(
        first.starts_with("FAIL") && first.contains(&format!("entry={idx}")),
        "{first}"
    );
}

#[test]
fn audit_against_an_explicit_hidden_instance() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let g = dir.path().join("g.json");
    fs::write(
        &g,
        r#"{"graph": {"n": 5, "edges": [[0,2],[2,4],[4,1],[1,3],[3,0],[0,1]]}}"#,
    )
    .unwrap();
    let out = bin(&[
        "groupiso-reduce",
        "--graph",
        path(&g),
        "--transcript",
        path(&t),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let audit = bin(&["audit", "--transcript", path(&t), "--instance", path(&g)]);
    assert_eq!(audit.status.code(), Some(0), "{}", stdout(&audit));
    assert!(stdout(&audit).starts_with("PASS"));

    // Same transcript against a different graph: some walk the simulator
    // accepted is not a Hamiltonian cycle there.
    let other = dir.path().join("other.json");
    fs::write(
        &other,
        r#"{"graph": {"n": 5, "edges": [[0,1],[1,2],[2,3],[3,4],[4,0]]}}"#,
    )
    .unwrap();
    let audit = bin(&[
        "audit",
        "--transcript",
        path(&t),
        "--instance",
        path(&other),
    ]);
    assert_eq!(audit.status.code(), Some(1), "{}", stdout(&audit));
}
