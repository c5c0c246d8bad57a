use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynattack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynattack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dynattack(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, data: &Path, method: &str) -> String {
    let config = format!(
        r#"{{
  "dataset": {{ "edge_stream": {{ "path": {data:?}, "snapshots": 3 }} }},
  "predictor": {{ "kind": "decay_frequency", "decay": 0.9, "threshold": 0.5 }},
  "delta": 0.05,
  "n_cap": 1000,
  "interaction": {{ "multiple_of_k": 3 }},
  "instances": 3,
  "method": "{method}",
  "agent": {{ "batch_size": 4, "hidden_sizes": [6] }},
  "seeds": {{ "data": 1, "feature": 2, "init": 3, "exploration": 4 }}
}}"#
    );
    let path = dir.join(format!("{method}.json"));
    fs::write(&path, config).unwrap();
    path.to_str().unwrap().to_string()
}

fn generate(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data").join("graphs.txt");
    ok(&[
        "gen",
        "--nodes",
        "12",
        "--snapshots",
        "3",
        "--instances",
        "3",
        "--base-density",
        "0.3",
        "--seed",
        "9",
        "--out",
        data.to_str().unwrap(),
    ]);
    data
}

#[test]
fn gen_attack_audit_stats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("# nodes 12"));

    let config = write_config(dir.path(), &data, "gse_metp");
    let run = dir.path().join("run");
    let stdout = ok(&[
        "attack",
        "--config",
        &config,
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(stdout.contains("K=4 I=12"), "{stdout}");
    for file in ["steps.jsonl", "summary.csv", "curve.csv", "manifest.json"] {
        assert!(run.join(file).exists(), "{file} missing");
    }
    // 3 instances, each 1 clean query + 11 steps.
    assert_eq!(
        fs::read_to_string(run.join("steps.jsonl"))
            .unwrap()
            .lines()
            .count(),
        33
    );

    let audit = ok(&["audit", run.to_str().unwrap()]);
    assert!(audit.contains("3 instances, 33 steps"), "{audit}");

    let stats = ok(&["stats", run.join("steps.jsonl").to_str().unwrap()]);
    assert!(stats.contains("gse_metp (33 steps)"), "{stats}");
    assert!(stats.contains("del_v"));
}

#[test]
fn attack_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    for method in ["gse_metp", "gse", "random"] {
        let config = write_config(dir.path(), &data, method);
        let a = dir.path().join(format!("{method}-a"));
        let b = dir.path().join(format!("{method}-b"));
        ok(&["attack", "--config", &config, "--out", a.to_str().unwrap()]);
        ok(&["attack", "--config", &config, "--out", b.to_str().unwrap()]);
        for file in ["steps.jsonl", "summary.csv", "manifest.json"] {
            assert_eq!(
                fs::read(a.join(file)).unwrap(),
                fs::read(b.join(file)).unwrap(),
                "{method}/{file} differs"
            );
        }
    }
}

#[test]
fn method_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let config = write_config(dir.path(), &data, "gse_metp");
    let run = dir.path().join("run");
    let stdout = ok(&[
        "attack",
        "--config",
        &config,
        "--out",
        run.to_str().unwrap(),
        "--method",
        "random",
    ]);
    assert!(stdout.starts_with("random:"), "{stdout}");
}

#[test]
fn audit_rejects_a_tampered_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let config = write_config(dir.path(), &data, "random");
    let run = dir.path().join("run");
    ok(&[
        "attack",
        "--config",
        &config,
        "--out",
        run.to_str().unwrap(),
    ]);

    let summary = run.join("summary.csv");
    let text = fs::read_to_string(&summary).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "queries").unwrap();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    cells[col] = (cells[col].parse::<u64>().unwrap() + 1).to_string();
    lines[1] = cells.join(",");
    fs::write(&summary, lines.join("\n") + "\n").unwrap();

    let out = dynattack(&["audit", run.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn sweep_writes_one_row_per_method_and_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let config = write_config(dir.path(), &data, "random");
    let out = dir.path().join("sweep");
    ok(&[
        "sweep",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--max-multiplier",
        "3",
        "--methods",
        "random,gse",
    ]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3, "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("random,3,12,")), "{csv}");
}

#[test]
fn config_without_seeds_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{ "dataset": { "synthetic": { "nodes": 10 } } }"#).unwrap();
    let out = dynattack(&[
        "attack",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeds"));
}
