//! End-to-end checks of the binary: file formats, exit codes, manifests,
//! and the pipelines that chain subcommands together.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flipbound::dataset::{self, LabelColumn};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flipbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Two interleaved diagonal classes, separable with a wide margin.
fn separable_csv(rows: usize) -> String {
    let mut out = String::from("f1,f2,label\n");
    for i in 0..rows {
        let t = i as f64 * 0.1;
        if i % 2 == 0 {
            out.push_str(&format!("{},{},1\n", 2.0 + t, 1.0 - t * 0.3));
        } else {
            out.push_str(&format!("{},{},-1\n", -2.0 - t, -1.0 + t * 0.3));
        }
    }
    out
}

/// Same classes with a mislabeled point in each cluster.
fn noisy_csv(rows: usize) -> String {
    let mut out = String::from("f1,f2,label\n");
    for i in 0..rows {
        let t = i as f64 * 0.1;
        let (x, y) = if i % 2 == 0 { (2.0 + t, 1.0 - t * 0.3) } else { (-2.0 - t, -1.0 + t * 0.3) };
        let label = match i {
            4 => -1,
            7 => 1,
            _ if i % 2 == 0 => 1,
            _ => -1,
        };
        out.push_str(&format!("{x},{y},{label}\n"));
    }
    out
}

#[test]
fn vertex_cover_pipeline_reports_the_cover_size() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("k3.txt");
    fs::write(&edges, "3\n1 2\n2 3\n1 3\n").unwrap();

    let vc = dir.path().join("vc");
    let out = run(&["gen-vc", "--edges", edges.to_str().unwrap(), "--out", vc.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cover = json(&vc.join("cover.json"));
    assert_eq!(cover["size"], 2);

    let ex = dir.path().join("ex");
    let out = run(&[
        "exact",
        "--train",
        vc.join("dataset.csv").to_str().unwrap(),
        "--target-json",
        vc.join("target.json").to_str().unwrap(),
        "--out",
        ex.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("robustness 2"), "stderr: {}", stderr(&out));
    let exact = json(&ex.join("exact.json"));
    assert_eq!(exact["robustness"], 2);
    assert_eq!(exact["status"], "proven");
    assert_eq!(exact["verified"], true);
    // The solver flips exactly the minimum cover's vertex rows.
    assert_eq!(exact["flip_set"], serde_json::json!([0, 1]));
}

#[test]
fn bounds_report_echoes_defaults_and_matches_its_summary() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(20)).unwrap();

    let out_dir = dir.path().join("bounds");
    let out = run(&[
        "bounds",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "0,5",
        "--k",
        "3",
        "--trials",
        "4",
        "--seed",
        "11",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["params"]["big_m"], 1000.0);
    assert_eq!(report["params"]["eps"], 1e-10);
    assert_eq!(report["params"]["k_effective"], 3);
    // Both targets extracted: 18 training rows remain, so k' defaults to 19.
    assert_eq!(report["params"]["k_prime_effective"], 19);
    assert_eq!(report["data"]["m"], 18);

    let manifest = json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["command"], "bounds");
    assert_eq!(manifest["args"]["params"]["seed"], 11);
    assert_eq!(manifest["args"]["params"]["train_cfg"]["trials"], 4);

    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,desired_label,lower,upper,lower_certified,upper_certified"
    );
    let targets = report["targets"].as_array().unwrap();
    assert_eq!(targets.len(), 2);
    for (line, target) in lines.zip(targets) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], target["index"].to_string());
        assert_eq!(cells[2], target["lower"].to_string());
        assert_eq!(cells[3], target["upper"].to_string());
    }
    for target in targets {
        assert!(target["lower"].as_u64().unwrap() <= target["upper"].as_u64().unwrap());
    }

    // Timing lives in the sidecar, never in the report.
    assert!(out_dir.join("timings.json").exists());
    assert!(!fs::read_to_string(out_dir.join("report.json")).unwrap().contains("millis"));
}

#[test]
fn single_block_bounds_close_on_an_easy_target() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, separable_csv(8)).unwrap();
    // A fresh point deep inside the positive cluster, asking for its own
    // side: no flips needed, and k = 1 solves the whole set exactly.
    let target = dir.path().join("target.json");
    fs::write(&target, r#"{"x": [2.5, 0.8], "y": 1.0}"#).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "bounds",
        "--train",
        train.to_str().unwrap(),
        "--target-json",
        target.to_str().unwrap(),
        "--k",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(&out_dir.join("report.json"));
    let t = &report["targets"][0];
    assert_eq!(t["lower"], 0);
    assert_eq!(t["upper"], 0);
    assert_eq!(t["lower_certified"], true);
    assert_eq!(t["upper_certified"], true);
}

#[test]
fn exit_codes_distinguish_input_errors_from_exhausted_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let out = run(&[
        "bounds",
        "--train",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--target-index",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(14)).unwrap();
    let out = run(&[
        "bounds",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "0",
        "--targets",
        train.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "conflicting target flags: {}", stderr(&out));

    let out = run(&[
        "exact",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "4",
        "--node-budget",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    // The result is still written and still a certified upper bound.
    let exact = json(&out_dir.join("exact.json"));
    assert_eq!(exact["status"], "budget_exhausted");
    assert_eq!(exact["verified"], true);
}

#[test]
fn poison_eval_emits_one_grid_per_loss_pair() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, separable_csv(16)).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "poison-eval",
        "--train",
        train.to_str().unwrap(),
        "--test-fraction",
        "0.25",
        "--fractions",
        "0,1",
        "--trials",
        "1",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let mut grid_files = 0;
    let mut data_rows = 0;
    for entry in fs::read_dir(&out_dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.starts_with("grid_") && name.ends_with(".csv") {
            grid_files += 1;
            let text = fs::read_to_string(out_dir.join(&name)).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next().unwrap(), "fraction,rho,accuracy,n");
            data_rows += lines.count();
        }
    }
    assert_eq!(grid_files, 9, "one file per loss pair");
    assert_eq!(data_rows, 2 * 9, "|fractions| rows in each of the 9 grids");

    let grids = json(&out_dir.join("grids.json"));
    assert_eq!(grids["grids"].as_array().unwrap().len(), 9);
    assert_eq!(grids["test_rows"], 4);
}

#[test]
fn hist_bins_cover_every_report_target() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(20)).unwrap();
    let bounds_dir = dir.path().join("bounds");
    let out = run(&[
        "bounds",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "0,3,5,8",
        "--k",
        "2",
        "--trials",
        "3",
        "--out",
        bounds_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let hist_dir = dir.path().join("hist");
    let out = run(&[
        "hist",
        "--input",
        bounds_dir.join("report.json").to_str().unwrap(),
        "--field",
        "upper",
        "--width",
        "2",
        "--out",
        hist_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let hist = json(&hist_dir.join("hist.json"));
    assert_eq!(hist["total"], 4, "every target binned");
    let sum: u64 =
        hist["bins"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
    assert_eq!(sum, 4);

    let csv = fs::read_to_string(hist_dir.join("hist.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "bin_lo,bin_hi,count");

    // Width and explicit edges at once is a usage error.
    let out = run(&[
        "hist",
        "--input",
        bounds_dir.join("report.json").to_str().unwrap(),
        "--width",
        "2",
        "--edges",
        "0,5,10",
        "--out",
        hist_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sanitized_output_reloads_and_reports_its_changes() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(24)).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "sanitize",
        "--train",
        train.to_str().unwrap(),
        "--k-neighbors",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let original = dataset::load_csv(&train, &LabelColumn::Last).unwrap();
    let cleaned =
        dataset::load_csv(out_dir.join("sanitized.csv"), &LabelColumn::Last).unwrap();
    assert_eq!(cleaned.m(), original.m());
    assert!(cleaned.rows().eq(original.rows()), "features untouched");

    let report = json(&out_dir.join("sanitize.json"));
    let changed: Vec<usize> = report["changed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    // The two planted label errors are exactly what the vote repairs.
    assert_eq!(changed, vec![4, 7]);
    for &i in &changed {
        assert_eq!(cleaned.label(i), -original.label(i));
    }
}

#[test]
fn sanitize_comparison_reports_intervals_before_and_after() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(12)).unwrap();
    let targets = dir.path().join("targets.csv");
    fs::write(&targets, "f1,f2,label\n2.05,0.97,-1\n").unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "sanitize",
        "--train",
        train.to_str().unwrap(),
        "--k-neighbors",
        "3",
        "--targets",
        targets.to_str().unwrap(),
        "--k",
        "2",
        "--trials",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let comparison = json(&out_dir.join("comparison.json"));
    let rows = comparison["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    for row in rows {
        assert!(row["lower_before"].as_u64().unwrap() <= row["upper_before"].as_u64().unwrap());
        assert!(row["lower_after"].as_u64().unwrap() <= row["upper_after"].as_u64().unwrap());
    }
    let csv = fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "target,lower_before,upper_before,lower_after,upper_after"
    );
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn upper_and_lower_write_standalone_reports() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    fs::write(&train, noisy_csv(16)).unwrap();

    let lo_dir = dir.path().join("lo");
    let out = run(&[
        "lower",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "4",
        "--k",
        "3",
        "--out",
        lo_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lower = json(&lo_dir.join("lower.json"));
    assert_eq!(lower["k"], 3);
    assert_eq!(lower["blocks"].as_array().unwrap().len(), 3);
    assert_eq!(lower["certified"], true);

    let up_dir = dir.path().join("up");
    let out = run(&[
        "upper",
        "--train",
        train.to_str().unwrap(),
        "--target-index",
        "4",
        "--trials",
        "4",
        "--out",
        up_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let upper = json(&up_dir.join("upper.json"));
    assert_eq!(upper["certified"], true);
    assert_eq!(upper["recheck_passed"], true);
    assert_eq!(
        upper["upper"].as_u64().unwrap(),
        upper["flip_set"].as_array().unwrap().len() as u64
    );
    assert!(lower["lower"].as_u64().unwrap() <= upper["upper"].as_u64().unwrap());
}

#[test]
fn named_label_column_is_honored_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    // Label first, features after: only --label makes this parseable.
    let mut text = String::from("class,f1,f2\n");
    for line in separable_csv(10).lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        text.push_str(&format!("{},{},{}\n", cells[2], cells[0], cells[1]));
    }
    fs::write(&train, text).unwrap();

    let out_dir = dir.path().join("out");
    let out = run(&[
        "bounds",
        "--train",
        train.to_str().unwrap(),
        "--label",
        "class",
        "--target-index",
        "1",
        "--k",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["data"]["d"], 2);
    assert_eq!(report["targets"][0]["desired_label"], 1.0);
}
