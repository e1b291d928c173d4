mod support;

use std::fs;

use support::{stderr, stdout, tripletreg, write_dataset};
use tripletreg::experiment::ExperimentReport;

const SUBCOMMANDS: [&str; 7] = [
    "validate",
    "train-tnn",
    "train-ae",
    "reduce",
    "regress",
    "experiment",
    "export-embeddings",
];

#[test]
fn help_everywhere() {
    let top = tripletreg(["--help"]);
    assert_eq!(top.status.code(), Some(0));
    for sub in SUBCOMMANDS {
        assert!(stdout(&top).contains(sub));
        let o = tripletreg([sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("--seed"), "{sub}");
    }
    let o = tripletreg(["train-tnn", "--help"]);
    for flag in [
        "--features",
        "--annotations",
        "--target",
        "--dims",
        "--delta-p",
        "--delta-n",
        "--margin",
        "--epochs-per-round",
        "--rounds",
        "--triplets-per-round",
        "--batch-size",
        "--lr",
        "--out",
    ] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
    let o = tripletreg(["experiment", "--help"]);
    for flag in ["--preset", "--jobs", "--data-dir", "--config"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let o = tripletreg(["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = tripletreg(["validate", "--features", "f.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--annotations"));
    let o = tripletreg::cli::main_with_args(["tripletreg"]);
    assert_eq!(o, 1);
}

#[test]
fn validate_prints_shape() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dataset(dir.path(), 30, 5);
    let o = tripletreg(["validate", "--features"].map(Into::into).into_iter().chain([
        f.features.clone().into_os_string(),
        "--annotations".into(),
        f.annotations.clone().into_os_string(),
    ]));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("n=30 d=5"));

    let o = tripletreg([
        "validate".as_ref(),
        "--features".as_ref(),
        dir.path().join("missing.csv").as_os_str(),
        "--annotations".as_ref(),
        f.annotations.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MissingFile"));
}

fn arg(p: &std::path::Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn train_reduce_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dataset(dir.path(), 40, 6);
    let (feat, ann) = (arg(&f.features), arg(&f.annotations));
    let model = arg(&dir.path().join("tnn.json"));
    let trip = arg(&dir.path().join("triplets.csv"));
    let train = |seed: &str| {
        tripletreg([
            "train-tnn", "--features", &feat, "--annotations", &ann, "--target", "valence", "--dims", "3",
            "--rounds", "2", "--epochs-per-round", "2", "--triplets-per-round", "100", "--batch-size", "16",
            "--lr", "1e-3", "--seed", seed, "--out", &model, "--dump-triplets", &trip,
        ])
    };
    let o = train("3");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("tnn epoch 4/4"));
    assert!(stdout(&o).starts_with("trained tnn"));
    let first = fs::read(&model).unwrap();
    assert_eq!(fs::read_to_string(&trip).unwrap().lines().count(), 101);
    assert_eq!(train("3").status.code(), Some(0));
    assert_eq!(fs::read(&model).unwrap(), first);

    let emb = arg(&dir.path().join("emb.csv"));
    let o = tripletreg(["reduce", "--model", &model, "--features", &feat, "--out", &emb]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&emb).unwrap();
    assert!(text.starts_with("song_id,e1,e2,e3\ns000,"));
    assert_eq!(text.lines().count(), 41);

    let out = arg(&dir.path().join("plot.csv"));
    let o = tripletreg([
        "export-embeddings", "--model", &model, "--features", &feat, "--annotations", &ann, "--target", "arousal",
        "--out", &out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with("e3,label,class"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",high")).count(), 10);
    assert_eq!(text.lines().filter(|l| l.ends_with(",low")).count(), 10);
}

#[test]
fn reduce_with_mismatched_width() {
    let dir = tempfile::tempdir().unwrap();
    let wide = write_dataset(dir.path(), 20, 6);
    let model = arg(&dir.path().join("pca.json"));
    let o = tripletreg([
        "reduce", "--method", "pca", "--dims", "2", "--features", &arg(&wide.features), "--save-model", &model,
        "--out", &arg(&dir.path().join("e.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let narrow_dir = tempfile::tempdir().unwrap();
    let narrow = write_dataset(narrow_dir.path(), 20, 4);
    let o = tripletreg([
        "reduce", "--model", &model, "--features", &arg(&narrow.features), "--out", &arg(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DimensionMismatch"));
}

#[test]
fn regress_reports_r2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dataset(dir.path(), 50, 5);
    let pred = dir.path().join("pred.csv");
    for reg in ["svr", "gbm"] {
        let o = tripletreg([
            "regress", "--train", &arg(&f.features), "--test", &arg(&f.features), "--annotations",
            &arg(&f.annotations), "--target", "valence", "--regressor", reg, "--out", &arg(&pred),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let line = stdout(&o);
        let r2: f64 = line.split("r2=").nth(1).unwrap().trim().parse().unwrap();
        assert!(r2 > 0.5, "{reg}: {line}");
        assert_eq!(fs::read_to_string(&pred).unwrap().lines().count(), 51);
    }
}

#[test]
fn experiment_is_reproducible_and_thread_count_free() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dataset(dir.path(), 45, 6);
    let config = dir.path().join("grid.json");
    fs::write(&config, support::SMALL_GRID).unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = tripletreg([
            "experiment", "--config", &arg(&config), "--data-dir", &arg(dir.path()), "--jobs", jobs, "--out", &arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (fs::read(&out).unwrap(), stdout(&o))
    };
    let (a, table) = run("a.json", "1");
    let (b, _) = run("b.json", "1");
    let (c, _) = run("c.json", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(dir.path().join("a.meta.json").exists());

    let report = ExperimentReport::from_json(std::str::from_utf8(&a).unwrap(), &config).unwrap();
    assert_eq!(report.cells.len(), 5);
    assert_eq!(report.seed, 7);
    assert!(!report.any_failed());
    assert!(report.literature.is_empty());
    assert!(table.contains("TNN-GBM (3 features)"));
    assert_eq!(table.lines().count(), 2 + 5 + 1);

    // --seed overrides the config seed
    let out = dir.path().join("s.json");
    let o = tripletreg([
        "experiment", "--config", &arg(&config), "--features", &arg(&f.features), "--annotations",
        &arg(&f.annotations), "--seed", "8", "--out", &arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(fs::read(&out).unwrap(), a);
}

#[test]
fn constant_labels_fail_cells_but_finish() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dataset(dir.path(), 30, 4);
    let text = fs::read_to_string(&f.annotations).unwrap();
    let flat: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                let cols: Vec<&str> = l.split(',').collect();
                format!("{},0.5,0.1,{}\n", cols[0], cols[3])
            }
        })
        .collect();
    fs::write(&f.annotations, flat).unwrap();
    let config = dir.path().join("grid.json");
    fs::write(&config, support::SMALL_GRID).unwrap();
    let out = dir.path().join("r.json");
    let o = tripletreg([
        "experiment", "--config", &arg(&config), "--data-dir", &arg(dir.path()), "--out", &arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAILED(DegenerateRange)"));
    let report = ExperimentReport::from_json(&fs::read_to_string(&out).unwrap(), &out).unwrap();
    for cell in &report.cells {
        assert!(cell.mean(tripletreg_core::Target::Valence).is_none());
        assert!(cell.mean(tripletreg_core::Target::Arousal).is_some());
    }
}

#[test]
fn experiment_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), 20, 4);
    // PCA(600) on 4 features
    let o = tripletreg([
        "experiment", "--preset", "mediaeval2013", "--data-dir", &arg(dir.path()), "--out",
        &arg(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("600 dims requested"));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"k_folds": 1, "cells": [{"reducer": null, "regressor": {"kind": "gbm"}}]}"#).unwrap();
    let o = tripletreg([
        "experiment", "--config", &arg(&bad), "--data-dir", &arg(dir.path()), "--out", &arg(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = tripletreg(["experiment", "--preset", "deam", "--out", &arg(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no dataset"));
}
