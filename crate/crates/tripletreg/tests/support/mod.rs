#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tripletreg_core::synthetic::{generate, SyntheticConfig};

pub struct Files {
    pub features: PathBuf,
    pub annotations: PathBuf,
}

/// Writes a small synthetic dataset: `n` songs, `d` features. Valence
/// follows the synthetic label, arousal the first latent coordinate.
/// Annotation rows are written in reverse order with an extra column.
pub fn write_dataset(dir: &Path, n: usize, d: usize) -> Files {
    let data = generate(&SyntheticConfig { n, dim: d, ..SyntheticConfig::default() }).unwrap();
    let mut f = String::from("song_id");
    for j in 1..=d {
        write!(f, ",f{j}").unwrap();
    }
    f.push('\n');
    for i in 0..n {
        write!(f, "s{i:03}").unwrap();
        for v in data.features.row(i) {
            write!(f, ",{v}").unwrap();
        }
        f.push('\n');
    }
    let mut a = String::from("song_id,valence_mean,valence_std,arousal_mean\n");
    for i in (0..n).rev() {
        writeln!(a, "s{i:03},{},0.1,{}", 5.0 + 2.0 * data.labels[i], 4.0 + data.latent[(i, 0)]).unwrap();
    }
    let features = dir.join("features.csv");
    let annotations = dir.join("annotations.csv");
    std::fs::write(&features, f).unwrap();
    std::fs::write(&annotations, a).unwrap();
    Files { features, annotations }
}

pub fn tripletreg<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_tripletreg")).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A quick experiment grid covering every reducer and both regressors.
pub const SMALL_GRID: &str = r#"{
  "k_folds": 3,
  "seed": 7,
  "cells": [
    {"reducer": null, "regressor": {"kind": "svr"}},
    {"reducer": {"kind": "pca", "dims": 3}, "regressor": {"kind": "svr"}},
    {"reducer": {"kind": "rp", "dims": 3, "seed": 50}, "regressor": {"kind": "gbm", "n_trees": 20}},
    {"reducer": {"kind": "ae", "train": {"embedding_dim": 3, "epochs": 5, "batch_size": 16}}, "regressor": {"kind": "svr"}},
    {"reducer": {"kind": "tnn", "mining": {"delta_p": 0.1, "delta_n": 0.5},
                 "train": {"embedding_dim": 3, "triplets_per_round": 200, "epochs_per_round": 2, "rounds": 2,
                           "batch_size": 32, "learning_rate": 1e-3}},
     "regressor": {"kind": "gbm", "n_trees": 20}}
  ]
}"#;
