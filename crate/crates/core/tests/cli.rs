mod common;

use common::*;
use rua::search::ledger_load;

#[test]
fn augment_zero_intensity_copies_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in"), dir.path().join("out"));
    write_corpus(&input, 5, 24, 16, 1);
    let out = rua(&[
        "augment", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap(), "--r", "0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_tree(&input), read_tree(&output));
}

#[test]
fn augment_full_intensity_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output, trace) = (dir.path().join("in"), dir.path().join("out"), dir.path().join("t.jsonl"));
    write_corpus(&input, 6, 20, 20, 2);
    let out = rua(&[
        "augment", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap(),
        "--r", "1", "--nmax", "5", "--seed", "9", "--trace", trace.to_str().unwrap(), "--jobs", "3",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(line["index"], i);
        assert_eq!(line["file"], format!("img_{i:03}.ppm"));
        assert_eq!(line["transforms"].as_array().unwrap().len(), 5);
    }
}

#[test]
fn augment_reports_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("in"), dir.path().join("out"));
    write_corpus(&input, 2, 8, 8, 3);
    std::fs::write(input.join("broken.ppm"), b"P5\n1 1\n255\n\0").unwrap();
    let out = rua(&[
        "augment", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap(), "--r", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.ppm"));

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = rua(&["augment", "--input", empty.to_str().unwrap(), "--output", output.to_str().unwrap(), "--r", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rejects_out_of_range_flags() {
    let out = rua(&["augment", "--input", "x", "--output", "y", "--r", "1.5"]);
    assert!(!out.status.success());
    let out = rua(&["search", "--eval-cmd", "echo 1"]);
    assert!(!out.status.success());
}

#[test]
fn demo_surface_peak() {
    let out = rua(&["demo-surface", "--peak", "0.6", "--height", "0.9", "--r", "0.6"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim().parse::<f64>().unwrap(), 0.9);
}

#[test]
fn search_with_demo_surface() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("search.jsonl");
    let template = demo_template("--peak 0.6 --noise 0");
    let out = rua(&["search", "--eval-cmd", &template, "--max-iter", "4", "--ledger", ledger.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows = stdout.lines().filter(|l| l.trim_start().chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert_eq!(rows, 6);
    assert!((best_r(&stdout) - 0.6).abs() <= 0.0902);
    assert_eq!(ledger_load(&ledger).unwrap().len(), 6);

    // a second fresh run refuses to overwrite the ledger
    let again = rua(&["search", "--eval-cmd", &template, "--ledger", ledger.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(4));
    // resuming a complete ledger re-evaluates nothing and reports the same answer
    let resumed = rua(&["search", "--eval-cmd", &template, "--ledger", ledger.to_str().unwrap(), "--resume"]);
    assert!(resumed.status.success());
    assert_eq!(best_r(&String::from_utf8_lossy(&resumed.stdout)), best_r(&stdout));
}

#[test]
fn search_exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("fail.jsonl");
    let out = rua(&["search", "--eval-cmd", "exit 7 # {r}", "--ledger", ledger.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let out = rua(&["search", "--eval-cmd", "echo not-a-number # {r}", "--ledger", dir.path().join("p.jsonl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let out = rua(&[
        "search", "--eval-cmd", "sleep 5; echo 1 # {r}", "--timeout", "0.2",
        "--ledger", dir.path().join("t.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, "{\"r\": 0.5}\n").unwrap();
    let out = rua(&["search", "--eval-cmd", "echo {r}", "--ledger", corrupt.to_str().unwrap(), "--resume"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn grid_modes() {
    let dir = tempfile::tempdir().unwrap();
    let template = demo_template("--peak 0.6");

    let diag = dir.path().join("diag.jsonl");
    let out = rua(&["grid", "--eval-cmd", &template, "--diagonal", "10", "--ledger", diag.to_str().unwrap(), "--jobs", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rs: Vec<f64> = ledger_load(&diag).unwrap().iter().map(|r| r.r).collect();
    rs.sort_by(f64::total_cmp);
    assert_eq!(rs, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
    assert_eq!(best_r(&String::from_utf8_lossy(&out.stdout)), 0.6);

    let points = dir.path().join("points.jsonl");
    let out = rua(&["grid", "--eval-cmd", &template, "--points", "0.9,0.3", "--ledger", points.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(ledger_load(&points).unwrap().len(), 2);

    let mn = dir.path().join("mn.jsonl");
    let out = rua(&["grid", "--eval-cmd", "echo {m}.{n} # {r}", "--mn", "1..2x1..3", "--ledger", mn.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = ledger_load(&mn).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| r.score == format!("{}.{}", r.m.unwrap(), r.n.unwrap()).parse::<f64>().unwrap()));
    assert!(String::from_utf8_lossy(&out.stdout).contains("best: M = 2, N = 3"));
}

#[test]
fn bench_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let json = dir.path().join("bench.json");
    write_corpus(&input, 4, 16, 16, 4);
    let out = rua(&[
        "bench", "--input", input.to_str().unwrap(), "--n", "0,2", "--trials", "3", "--json", json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["n"], 0);
    assert_eq!(rows[1]["n"], 2);
    for row in rows {
        assert_eq!(row["trial_images_per_sec"].as_array().unwrap().len(), 3);
        assert!(row["images_per_sec"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(report["images"], 4);
}
