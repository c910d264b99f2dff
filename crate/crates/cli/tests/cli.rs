use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const QUERIES: [&str; 3] = ["401", "402", "403"];

fn sdpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdpower"))
        .args(args)
        .output()
        .expect("spawn sdpower")
}

/// Data rows of a CSV with `#` header comments.
fn data_rows(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

/// Two runs over three queries, 30 documents each with 8 relevant ones
/// spread through the ranking.
fn write_collection(dir: &Path) {
    let mut qrels = String::new();
    for q in QUERIES {
        for d in 0..40 {
            qrels.push_str(&format!("{q} 0 d{d} {}\n", u8::from(d % 4 == 0)));
        }
    }
    fs::write(dir.join("qrels.txt"), qrels).unwrap();
    fs::create_dir(dir.join("runs")).unwrap();
    for (tag, offset) in [("alpha", 0u32), ("beta", 7)] {
        let mut run = String::new();
        for q in QUERIES {
            for rank in 0..30u32 {
                let doc = (rank * 3 + offset) % 40;
                let score = 20.0 - rank as f64 * 0.5 + f64::from(doc % 4 == 0) * 1.5;
                run.push_str(&format!("{q} Q0 d{doc} {} {score} {tag}\n", rank + 1));
            }
        }
        fs::write(dir.join("runs").join(tag), run).unwrap();
    }
    fs::write(
        dir.join("manifest.toml"),
        "collection = \"toy\"\nruns = [\"runs/\"]\nqrels = \"qrels.txt\"\nout = \"out\"\nseed = 3\n",
    )
    .unwrap();
}

#[test]
fn fit_writes_one_model_per_system_query() {
    let dir = TempDir::new().unwrap();
    write_collection(dir.path());
    let out = sdpower(&["fit", "--manifest", dir.path().join("manifest.toml").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(data_rows(&dir.path().join("out/models.csv")).len(), 6);
    assert!(dir.path().join("out/exclusions.tsv").exists());
    assert!(dir.path().join("out/fit_failures.tsv").exists());
}

#[test]
fn missing_qrels_is_reported() {
    let dir = TempDir::new().unwrap();
    write_collection(dir.path());
    fs::remove_file(dir.path().join("qrels.txt")).unwrap();
    let out = sdpower(&["fit", "--manifest", dir.path().join("manifest.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qrels.txt"));
}

#[test]
fn type1_row_count_follows_grids() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("family.txt");
    fs::write(&spec, "repeat 10 0.1 1.2 0.4 0.8 0.4\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = sdpower(&[
        "type1",
        "--synthetic", spec.to_str().unwrap(),
        "--seed", "9",
        "--out", out_dir.to_str().unwrap(),
        "--alpha-grid", "0.01,0.05,0.1",
        "--queries", "5,10",
        "--reps", "20",
        "--resamples", "100",
        "--samples", "100",
        "--threads", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&out_dir.join("type1.csv"));
    assert_eq!(rows.len(), 3 * 5 * 2);
    let text = fs::read_to_string(out_dir.join("type1.csv")).unwrap();
    assert!(text.lines().any(|l| l == "# seed=9"), "{text}");
}

#[test]
fn all_relevant_lists_have_unit_mean_ap() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("family.txt");
    fs::write(&spec, "system s\nq1 1 1.0 0.5 0.0 0.5\nq2 1 2.0 0.3 0.0 0.5\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = sdpower(&[
        "validity",
        "--synthetic", spec.to_str().unwrap(),
        "--seed", "1",
        "--out", out_dir.to_str().unwrap(),
        "--h-grid", "0,0.1",
        "--simulations", "5",
        "--samples", "50",
        "--delta-reps", "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let map = data_rows(&out_dir.join("validity_map.csv"));
    assert_eq!(map.len(), 2);
    for row in &map {
        let ap: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(ap, 1.0, "{row}");
    }
    assert_eq!(data_rows(&out_dir.join("delta_ap.csv")).len(), 2 * 7);
}

#[test]
fn empty_spec_is_rejected() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("empty.txt");
    fs::write(&spec, "# nothing here\n").unwrap();
    let out = sdpower(&["power", "--synthetic", spec.to_str().unwrap(), "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test_subcommand_prints_five_rows() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("ap.tsv");
    fs::write(&file, "0.30 0.25\n0.41 0.40\n0.12 0.05\n0.55 0.50\n0.20 0.22\n0.33 0.21\n").unwrap();
    let out = sdpower(&["test", file.to_str().unwrap(), "--seed", "4", "--resamples", "500"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let tests: Vec<&str> = stdout.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(tests, ["ttest", "wilcoxon", "sign", "permutation", "bootstrap"]);

    fs::write(&file, "0.3 0.2\n").unwrap();
    let out = sdpower(&["test", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
