use std::path::Path;
use std::process::{Command, Output};

fn irdpg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irdpg"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = irdpg(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

fn field(text: &str, row: usize, name: &str) -> String {
    let rows = csv_rows(text);
    let col = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[row][col].clone()
}

#[test]
fn generate_is_deterministic_and_stats_reads_it_back() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "5", "--out-dir", ".", "generate", "--example", "ex2", "--n", "200", "--scale", "2"];
    let sa = ok(a.path(), &args);
    ok(b.path(), &args);
    let file = "ex2_n200_seed5.txt";
    assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap());
    assert!(a.path().join("ex2_n200_seed5_latents.csv").exists());

    let st = ok(a.path(), &["stats", file, "--caps", "1000"]);
    assert_eq!(field(&st, 1, "edge_count"), field(&sa, 1, "edge_count"));
    assert_eq!(field(&st, 1, "triangle_count"), field(&sa, 1, "triangle_count"));
    assert_eq!(field(&st, 2, "cap"), "1000");
    assert_eq!(field(&st, 2, "triangle_count"), field(&st, 1, "triangle_count"));
}

#[test]
fn ingest_reports_cleaning() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("tri.txt"), "# comment\n0 1\n1 2\n2 0\n1 0\n3 3\n").unwrap();
    let out: serde_json::Value = serde_json::from_str(&ok(d.path(), &["--out-dir", "o", "ingest", "tri.txt"])).unwrap();
    assert_eq!(out["edges"], 3);
    assert_eq!(out["duplicate_edges"], 1);
    assert_eq!(out["self_loops_dropped"], 1);
    assert_eq!(out["largest_component"], 3);
    assert!(d.path().join("o/tri_clean.txt").exists());
    assert!(d.path().join("o/tri_node_map.csv").exists());
    let st = ok(d.path(), &["stats", "o/tri_clean.txt"]);
    assert_eq!(field(&st, 1, "triangle_count"), "1");
}

#[test]
fn malformed_and_empty_inputs_fail_with_context() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.txt"), "0 1\n1 x\n").unwrap();
    let out = irdpg(d.path(), &["stats", "bad.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    std::fs::write(d.path().join("empty.txt"), "# nothing\n").unwrap();
    assert!(!irdpg(d.path(), &["stats", "empty.txt"]).status.success());
}

#[test]
fn embed_and_local_write_artifacts() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--seed", "2", "--out-dir", ".", "generate", "--example", "square2d", "--n", "300", "--scale", "3"]);
    let g = "square2d_n300_seed2.txt";
    let e: serde_json::Value = serde_json::from_str(&ok(d.path(), &["embed", g, "--dim", "3", "--scree", "5"])).unwrap();
    assert_eq!(e["scree"].as_array().unwrap().len(), 5);
    assert!(d.path().join("square2d_n300_seed2_ase_d3.csv").exists());
    assert!(d.path().join("square2d_n300_seed2_ase_d3.json").exists());

    let l: serde_json::Value = serde_json::from_str(&ok(d.path(), &["local", g, "--query", "0", "--k", "20", "--dim", "2"])).unwrap();
    assert_eq!(l["core_ids"].as_array().unwrap().len(), 20);
    for f in ["core.txt", "slice.coo", "core_ase_d2.csv", "slice_left_d2.csv", "slice_right_d2.csv"] {
        assert!(d.path().join(format!("square2d_n300_seed2_q0_k20_{f}")).exists(), "{f}");
    }
}

#[test]
fn oracle_reports_and_rate_fits_are_csv() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["oracle", "--example", "ex1", "--n", "2000", "--quantity", "rho", "--samples", "10000"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0][0], "quantity");
    let q = rows.iter().find(|r| r[2] == "quadrature").unwrap();
    let v: f64 = q[1].parse().unwrap();
    assert!((v - 0.786950903472308).abs() < 1e-12);

    let fit = ok(d.path(), &["oracle", "--example", "ex1", "--quantity", "rho", "--rate-over", "2,4,8,16,32"]);
    assert_eq!(csv_rows(&fit).len(), 6);
    assert_eq!(field(&fit, 1, "pass"), "true");
}

#[test]
fn experiment_reruns_are_byte_identical_and_flags_beat_config() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("run.cfg"), "# graphon runs\nreplicates = 50\nn = 300\n").unwrap();
    for out in ["a", "b"] {
        ok(d.path(), &["--config", "run.cfg", "--out-dir", out, "--seed", "9", "experiment", "graphon_check", "--set", "replicates=3"]);
    }
    let a = std::fs::read_to_string(d.path().join("a/graphon_check.csv")).unwrap();
    let b = std::fs::read_to_string(d.path().join("b/graphon_check.csv")).unwrap();
    assert_eq!(a, b);
    // two sparsity rules, three replicates each
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["parameters"]["n"], "300");
    assert_eq!(manifest["parameters"]["replicates"], "3");
}

#[test]
fn unknown_experiment_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    assert!(!irdpg(d.path(), &["experiment", "fig9"]).status.success());
}
