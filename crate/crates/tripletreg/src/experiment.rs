//! Cross-validated experiment grids: configuration, execution and reports.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tripletreg_core::data::{kfold_split, normalize_values};
use tripletreg_core::eval::{cross_validate, CellResult, CellSpec};
use tripletreg_core::reducers::ReducerSpec;
use tripletreg_core::Target;

use crate::error::{Error, Result};
use crate::io::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Mediaeval2013,
    Deam,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Mediaeval2013 => "mediaeval2013",
            Preset::Deam => "deam",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mediaeval2013" => Ok(Preset::Mediaeval2013),
            "deam" => Ok(Preset::Deam),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected mediaeval2013 or deam)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub features: PathBuf,
    pub annotations: PathBuf,
}

fn default_preset() -> Preset {
    Preset::Custom
}

fn default_targets() -> Vec<Target> {
    Target::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Relative paths are resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetPaths>,
    #[serde(default = "default_targets")]
    pub targets: Vec<Target>,
    pub k_folds: usize,
    #[serde(default)]
    pub seed: u64,
    pub cells: Vec<CellSpec>,
}

const MEDIAEVAL_PRESET: &str = include_str!("../presets/mediaeval2013.json");
const DEAM_PRESET: &str = include_str!("../presets/deam.json");

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Result<Self> {
        let text = match preset {
            Preset::Mediaeval2013 => MEDIAEVAL_PRESET,
            Preset::Deam => DEAM_PRESET,
            Preset::Custom => return Err(Error::Config("`custom` needs a config file".into())),
        };
        Self::from_json(text, Path::new(preset.name()))
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::from_json(&crate::io::read_text(path)?, path)?;
        if let (Some(ds), Some(dir)) = (config.dataset.as_mut(), path.parent()) {
            for p in [&mut ds.features, &mut ds.annotations] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(Error::Config(format!("k_folds must be at least 2, got {}", self.k_folds)));
        }
        if self.cells.is_empty() {
            return Err(Error::Config("no cells".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("no targets".into()));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            let wrap = |e: tripletreg_core::Error| Error::Config(format!("cell {i} ({}): {e}", cell.label()));
            match &cell.reducer {
                Some(ReducerSpec::Tnn { mining, train }) => {
                    mining.validate().map_err(wrap)?;
                    train.validate().map_err(wrap)?;
                }
                Some(spec) if spec.target_dim() == 0 => {
                    return Err(Error::Config(format!("cell {i}: reducer dims must be positive")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks against the loaded data: reduced dims must not exceed the
    /// feature count and folds must fit the sample count.
    pub fn validate_for(&self, n: usize, d: usize) -> Result<()> {
        self.validate()?;
        if self.k_folds > n {
            return Err(Error::Config(format!("k_folds {} exceeds the {n} samples", self.k_folds)));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if let Some(r) = &cell.reducer {
                if r.target_dim() > d {
                    return Err(Error::Config(format!(
                        "cell {i} ({}): {} dims requested but data has {d} features",
                        cell.label(),
                        r.target_dim()
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the configuration without dataset paths.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.dataset = None;
        let canonical = serde_json::to_string(&c).expect("config is plain data");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TargetResult {
    Ok {
        target: Target,
        /// `null` where the held-out fold leaves R² undefined.
        fold_r2: Vec<Option<f64>>,
        mean: Option<f64>,
        std: Option<f64>,
        pooled_r2: Option<f64>,
    },
    Failed {
        target: Target,
        fold: Option<usize>,
        error: String,
        message: String,
    },
}

impl TargetResult {
    pub fn target(&self) -> Target {
        match self {
            TargetResult::Ok { target, .. } | TargetResult::Failed { target, .. } => *target,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, TargetResult::Failed { .. })
    }

    fn from_cell(target: Target, r: CellResult) -> Self {
        TargetResult::Ok {
            target,
            fold_r2: r.fold_r2(),
            mean: r.mean,
            std: r.std,
            pooled_r2: r.pooled_r2,
        }
    }

    fn failed(target: Target, fold: Option<usize>, e: &tripletreg_core::Error) -> Self {
        TargetResult::Failed {
            target,
            fold,
            error: e.tag().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub label: String,
    pub spec: CellSpec,
    pub results: Vec<TargetResult>,
}

impl CellReport {
    pub fn result(&self, target: Target) -> Option<&TargetResult> {
        self.results.iter().find(|r| r.target() == target)
    }

    pub fn mean(&self, target: Target) -> Option<f64> {
        match self.result(target)? {
            TargetResult::Ok { mean, .. } => *mean,
            TargetResult::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiteratureValue {
    pub mean: f64,
    pub std: Option<f64>,
}

/// Published comparison numbers, reproduced verbatim and never computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteratureRow {
    pub label: String,
    pub valence: LiteratureValue,
    pub arousal: LiteratureValue,
}

fn literature_rows(preset: Preset) -> Vec<LiteratureRow> {
    if preset != Preset::Mediaeval2013 {
        return Vec::new();
    }
    let v = |mean, std| LiteratureValue { mean, std };
    vec![
        LiteratureRow {
            label: "SVR (Markov & Matsui 2013)".into(),
            valence: v(0.112, None),
            arousal: v(0.300, None),
        },
        LiteratureRow {
            label: "GPR (Markov & Matsui 2013)".into(),
            valence: v(0.170, None),
            arousal: v(0.581, None),
        },
        LiteratureRow {
            label: "GPR (Fukuyama & Goto 2016)".into(),
            valence: v(0.413, Some(0.043)),
            arousal: v(0.636, Some(0.040)),
        },
    ]
}

pub const REPORT_VERSION: u32 = 1;

/// Everything in here is a function of config and data, so two runs give
/// byte-identical serializations. Timing lives in [`RunMetadata`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub preset: Preset,
    pub config_hash: String,
    pub seed: u64,
    pub k_folds: usize,
    pub n_samples: usize,
    pub n_features: usize,
    pub targets: Vec<Target>,
    pub fold_sizes: Vec<usize>,
    pub cells: Vec<CellReport>,
    pub literature: Vec<LiteratureRow>,
}

impl ExperimentReport {
    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.results.iter().any(TargetResult::is_failed))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Run provenance kept apart from the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub config_hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub jobs: usize,
    pub features: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

/// `report.json` → `report.meta.json`.
pub fn metadata_path(report: &Path) -> PathBuf {
    report.with_extension("meta.json")
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs every (cell, target) job. Jobs are spread over `jobs` threads; each
/// job is seeded from (config seed, cell index, fold index) only, so the
/// report does not depend on the thread count. `log` receives one line per
/// finished job.
pub fn run_experiment(
    config: &ExperimentConfig,
    data: &Dataset,
    jobs: usize,
    log: &(dyn Fn(&str) + Sync),
) -> Result<(ExperimentReport, RunMetadata)> {
    let started = unix_now();
    let clock = std::time::Instant::now();
    let x = data.features.values();
    let (n, d) = (x.rows(), x.cols());
    config.validate_for(n, d)?;
    let folds = kfold_split(n, config.k_folds, config.seed)?;

    // labels are rescaled on the whole dataset; a degenerate target only
    // fails its own cells
    let labels: Vec<std::result::Result<Vec<f64>, tripletreg_core::Error>> = config
        .targets
        .iter()
        .map(|&t| normalize_values(data.annotations.target(t), t.name()))
        .collect();

    let n_targets = config.targets.len();
    let total = config.cells.len() * n_targets;
    let slots: Vec<Mutex<Option<TargetResult>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let worker = || loop {
        let job = next.fetch_add(1, Ordering::Relaxed);
        if job >= total {
            break;
        }
        let (cell_idx, t_idx) = (job / n_targets, job % n_targets);
        let cell = &config.cells[cell_idx];
        let target = config.targets[t_idx];
        let result = match &labels[t_idx] {
            Err(e) => TargetResult::failed(target, None, e),
            Ok(y) => match cross_validate(cell, x, y, &folds, config.seed, cell_idx) {
                Ok(r) => TargetResult::from_cell(target, r),
                Err(f) => TargetResult::failed(target, Some(f.fold), &f.error),
            },
        };
        let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
        log(&format!(
            "[{finished}/{total}] {} {}: {}",
            cell.label(),
            target.name(),
            render_result(Some(&result))
        ));
        *slots[job].lock().expect("no panics while holding the lock") = Some(result);
    };
    std::thread::scope(|s| {
        for _ in 1..jobs.max(1) {
            s.spawn(worker);
        }
        worker();
    });

    let mut results = slots.into_iter().map(|m| m.into_inner().expect("lock").expect("every job ran"));
    let cells = config
        .cells
        .iter()
        .enumerate()
        .map(|(index, spec)| CellReport {
            index,
            label: spec.label(),
            spec: spec.clone(),
            results: results.by_ref().take(n_targets).collect(),
        })
        .collect();
    let report = ExperimentReport {
        format_version: REPORT_VERSION,
        preset: config.preset,
        config_hash: config.hash(),
        seed: config.seed,
        k_folds: config.k_folds,
        n_samples: n,
        n_features: d,
        targets: config.targets.clone(),
        fold_sizes: folds.fold_sizes(),
        cells,
        literature: literature_rows(config.preset),
    };
    let meta = RunMetadata {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: report.config_hash.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        jobs: jobs.max(1),
        features: config.dataset.as_ref().map(|d| d.features.clone()),
        annotations: config.dataset.as_ref().map(|d| d.annotations.clone()),
    };
    Ok((report, meta))
}

fn render_result(r: Option<&TargetResult>) -> String {
    match r {
        None => "-".into(),
        Some(TargetResult::Failed { error, .. }) => format!("FAILED({error})"),
        Some(TargetResult::Ok { mean: None, .. }) => "n/a".into(),
        Some(TargetResult::Ok { mean: Some(m), std, .. }) => match std {
            Some(s) => format!("{m:.3}±{s:.3}"),
            None => format!("{m:.3}"),
        },
    }
}

fn render_literature(v: &LiteratureValue) -> String {
    match v.std {
        Some(s) => format!("{:.3}±{s:.3}", v.mean),
        None => format!("{:.3}", v.mean),
    }
}

/// Plain-text table: literature rows first (marked), then cells in config
/// order.
pub fn render_table(report: &ExperimentReport) -> String {
    let mut rows: Vec<[String; 3]> = Vec::new();
    for lit in &report.literature {
        rows.push([
            format!("{} [literature]", lit.label),
            render_literature(&lit.valence),
            render_literature(&lit.arousal),
        ]);
    }
    for cell in &report.cells {
        rows.push([
            cell.label.clone(),
            render_result(cell.result(Target::Valence)),
            render_result(cell.result(Target::Arousal)),
        ]);
    }
    let header = ["model".to_string(), "valence".to_string(), "arousal".to_string()];
    let width = |i: usize| {
        rows.iter()
            .chain(std::iter::once(&header))
            .map(|r| r[i].chars().count())
            .max()
            .unwrap_or(0)
    };
    let (w0, w1) = (width(0), width(1));
    let line = |r: &[String; 3]| {
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
        format!("{} | {} | {}\n", pad(&r[0], w0), pad(&r[1], w1), r[2])
    };
    let mut out = line(&header);
    out.push_str(&format!("{}-+-{}-+-{}\n", "-".repeat(w0), "-".repeat(w1), "-".repeat(width(2))));
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        let me = ExperimentConfig::preset(Preset::Mediaeval2013).unwrap();
        me.validate().unwrap();
        assert_eq!(me.cells.len(), 10);
        assert_eq!(me.k_folds, 10);
        let labels: Vec<String> = me.cells.iter().map(CellSpec::label).collect();
        assert!(labels.contains(&"TNN-SVR (600 features)".to_string()));
        assert!(labels.contains(&"GBM (all features)".to_string()));

        let deam = ExperimentConfig::preset(Preset::Deam).unwrap();
        deam.validate().unwrap();
        assert_eq!(deam.cells.len(), 18);
        let tnn = deam
            .cells
            .iter()
            .find_map(|c| match &c.reducer {
                Some(ReducerSpec::Tnn { train, mining }) => Some((*train, *mining)),
                _ => None,
            })
            .unwrap();
        assert_eq!(tnn.0.triplets_per_round, 150_000);
        assert_eq!(tnn.0.learning_rate, 1e-5);
        assert_eq!(tnn.0.total_epochs(), 250);
        assert_eq!((tnn.1.delta_p, tnn.1.delta_n), (0.1, 0.5));
        let rp_seed = deam.cells.iter().find_map(|c| match c.reducer {
            Some(ReducerSpec::Rp { seed, .. }) => Some(seed),
            _ => None,
        });
        assert_eq!(rp_seed, Some(50));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"k_folds": 3, "cells": [{"reducer": null, "regressor": {"kind": "svr", "cc": 1}}]}"#;
        assert!(ExperimentConfig::from_json(text, Path::new("x")).is_err());
        let text = r#"{"k_folds": 3, "cells": [{"reducer": {"kind": "pca", "dims": 2}, "regressor": {"kind": "gbm"}}]}"#;
        let c = ExperimentConfig::from_json(text, Path::new("x")).unwrap();
        assert_eq!(c.preset, Preset::Custom);
        assert_eq!(c.targets, Target::ALL.to_vec());
    }

    #[test]
    fn hash_ignores_dataset_paths() {
        let mut a = ExperimentConfig::preset(Preset::Deam).unwrap();
        let h = a.hash();
        a.dataset = Some(DatasetPaths {
            features: "f.csv".into(),
            annotations: "a.csv".into(),
        });
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 64);
    }

    #[test]
    fn table_rendering() {
        let spec = ExperimentConfig::preset(Preset::Deam).unwrap().cells[0].clone();
        let report = ExperimentReport {
            format_version: REPORT_VERSION,
            preset: Preset::Mediaeval2013,
            config_hash: String::new(),
            seed: 0,
            k_folds: 2,
            n_samples: 4,
            n_features: 2,
            targets: Target::ALL.to_vec(),
            fold_sizes: vec![2, 2],
            cells: vec![CellReport {
                index: 0,
                label: spec.label(),
                spec,
                results: vec![
                    TargetResult::Ok {
                        target: Target::Valence,
                        fold_r2: vec![Some(0.5), Some(0.25)],
                        mean: Some(0.375),
                        std: Some(0.125),
                        pooled_r2: Some(0.4),
                    },
                    TargetResult::Failed {
                        target: Target::Arousal,
                        fold: Some(1),
                        error: "InfeasibleAnchor".into(),
                        message: String::new(),
                    },
                ],
            }],
            literature: literature_rows(Preset::Mediaeval2013),
        };
        let table = render_table(&report);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2 + 3 + 1);
        assert!(lines[2].contains("[literature]") && lines[4].contains("0.413±0.043"));
        assert!(lines[5].starts_with("SVR (all features)"));
        assert!(lines[5].contains("0.375±0.125") && lines[5].ends_with("FAILED(InfeasibleAnchor)"));
        assert!(report.any_failed());
    }

    #[test]
    fn meta_path() {
        assert_eq!(metadata_path(Path::new("out/report.json")), PathBuf::from("out/report.meta.json"));
    }
}
