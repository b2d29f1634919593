use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hgbench_core::bench::{read_records, Status, PLOT_FILE, RECORDS_FILE, SUMMARY_FILE};
use hgbench_core::data::{save_node_dataset, synthetic::two_cliques};

fn hgbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgbench"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_rhg_then_dataset_info() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        hgbench(&["gen-rhg", "--kind", "rhg3", "--n", "30", "--seed", "2", "--out", "rhg.jsonl"], dir.path());
    assert!(stdout(&out).contains("30 hypergraphs, 3 classes"));
    let info = stdout(&hgbench(&["dataset-info", "rhg.jsonl"], dir.path()));
    assert!(info.contains("hypergraphs  30"), "{info}");
    assert!(info.contains("classes      3"));
    let again = hgbench(
        &["gen-rhg", "--kind", "rhg3", "--n", "30", "--seed", "2", "--out", "copy.jsonl"],
        dir.path(),
    );
    stdout(&again);
    assert_eq!(
        fs::read(dir.path().join("rhg.jsonl")).unwrap(),
        fs::read(dir.path().join("copy.jsonl")).unwrap()
    );
    let bad = hgbench(&["gen-rhg", "--kind", "pyramid,spiral", "--n", "3", "--out", "x.jsonl"], dir.path());
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("spiral"));
}

#[test]
fn dataset_info_on_node_directory() {
    let dir = tempfile::tempdir().unwrap();
    save_node_dataset(&two_cliques(), dir.path().join("toy")).unwrap();
    let info = stdout(&hgbench(&["dataset-info", "toy"], dir.path()));
    assert!(info.contains("nodes        8"), "{info}");
    assert!(info.contains("hyperedges   2"));
}

const CONFIG: &str = r#"{
    "name": "cli",
    "dataset": {"generate": {"kind": "planted", "config": {"nodes": 60, "seed": 1}}},
    "task": "node",
    "model": [{"kind": "hgnn", "hidden": 8}, {"kind": "mlp", "hidden": 8}],
    "budget": {"epochs": 10},
    "perturb": {"target": "feature_mask", "ratios": [0.0, 0.5]},
    "output": "out"
}"#;

#[test]
fn run_writes_reports_and_report_reemits() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.json"), CONFIG).unwrap();
    stdout(&hgbench(&["run", "--config", "exp.json", "--seeds", "3,4", "--jobs", "2"], dir.path()));
    let out = dir.path().join("out");
    let records = read_records(out.join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.status == Status::Ok && r.metrics.as_ref().unwrap().seeds == [3, 4]));

    fs::remove_file(out.join(SUMMARY_FILE)).unwrap();
    fs::remove_file(out.join(PLOT_FILE)).unwrap();
    stdout(&hgbench(&["report", "--in", "out", "--format", "csv"], dir.path()));
    assert!(out.join(SUMMARY_FILE).exists());
    assert!(!out.join(PLOT_FILE).exists());
    stdout(&hgbench(&["report", "--in", "out", "--format", "plot", "--out", "plots"], dir.path()));
    let plot = fs::read_to_string(dir.path().join("plots").join(PLOT_FILE)).unwrap();
    assert!(plot.starts_with("dataset,target,ratio,hgnn,mlp"), "{plot}");
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), CONFIG.replace("\"budget\"", "\"budgte\"")).unwrap();
    let out = hgbench(&["run", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("budgte"));
}
