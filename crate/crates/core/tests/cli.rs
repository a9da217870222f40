use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn evopipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evopipe"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn ok(args: &[&str]) -> (String, String) {
    let out = evopipe(args);
    let (so, se) = (text(&out.stdout), text(&out.stderr));
    assert!(out.status.success(), "{args:?} failed:\n{so}\n{se}");
    (so, se)
}

const SMALL: [&str; 10] = [
    "--dataset",
    "hill-valley:60x10",
    "--generations",
    "1",
    "--population",
    "4",
    "--replicates",
    "1",
    "--cv-folds",
    "3",
];

fn only_json(dir: &Path) -> std::path::PathBuf {
    let files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json") && !p.ends_with("manifest.json"))
        .collect();
    assert_eq!(files.len(), 1, "{files:?}");
    files[0].clone()
}

#[test]
fn run_fit_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let out_s = out.to_str().unwrap();
    let mut args = vec!["run", "--nn", "--out", out_s];
    args.extend(SMALL);
    let (stdout, _) = ok(&args);
    assert!(stdout.contains("replicate 0 seed 0"));
    assert!(out.join("results.csv").is_file());

    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(only_json(&out)).unwrap()).unwrap();
    assert_eq!(result["family"], "TPOT-NN");
    let export = result["replicates"][0]["best_pipeline"].as_str().unwrap();
    assert!(export.starts_with("evopipe-export v1"));
    let pipe = dir.path().join("best.txt");
    fs::write(&pipe, export).unwrap();

    let refreshed = dir.path().join("refit.txt");
    let (stdout, _) = ok(&[
        "fit",
        "--pipeline",
        pipe.to_str().unwrap(),
        "--dataset",
        "hill-valley:60x10",
        "--out",
        refreshed.to_str().unwrap(),
    ]);
    assert!(stdout.contains("train accuracy"), "{stdout}");
    assert!(fs::read_to_string(&refreshed)
        .unwrap()
        .contains("cv_score = "));

    let input = dir.path().join("rows.csv");
    let header: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
    let row: Vec<String> = (0..10).map(|i| format!("{}", i as f64 * 0.1)).collect();
    fs::write(
        &input,
        format!(
            "{}\n{}\n{}\n",
            header.join(","),
            row.join(","),
            row.join(",")
        ),
    )
    .unwrap();
    let (stdout, _) = ok(&[
        "predict",
        "--pipeline",
        pipe.to_str().unwrap(),
        "--dataset",
        "hill-valley:60x10",
        "--input",
        input.to_str().unwrap(),
    ]);
    let labels: Vec<&str> = stdout.lines().collect();
    assert_eq!(labels.len(), 2);
    assert!(labels.iter().all(|l| *l == "0" || *l == "1"));
    assert_eq!(labels[0], labels[1]);
}

#[test]
fn grid_resumes_and_report_summarises() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let out_s = out.to_str().unwrap();
    let mut args = vec!["grid", "--out", out_s];
    args.extend(SMALL);
    let (first, _) = ok(&args);
    assert_eq!(first.matches(": completed").count(), 4, "{first}");
    assert!(out.join("manifest.json").is_file());

    let (second, stderr) = ok(&args);
    assert_eq!(second.matches(": skipped (exists)").count(), 4, "{second}");
    assert!(stderr.contains("skipped (exists)"));

    let (report, _) = ok(&["report", out_s]);
    for family in ["NN", "TPOT", "TPOT-NN", "Shallow"] {
        assert!(
            report
                .lines()
                .any(|l| l.split_whitespace().next() == Some(family)),
            "{family} missing from\n{report}"
        );
    }
    assert!(report.contains("training time (s)"));
}

#[test]
fn errors_exit_non_zero_with_a_message() {
    let out = evopipe(&["run", "--dataset", "no-such-dataset", "--replicates", "1"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("error:"));

    let out = evopipe(&[
        "run",
        "--single-estimator",
        "--template",
        "Selector-Classifier",
    ]);
    assert!(!out.status.success());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "evopipe-export v9\n").unwrap();
    let out = evopipe(&["fit", "--pipeline", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(
        text(&out.stderr).contains("version"),
        "{}",
        text(&out.stderr)
    );
}
