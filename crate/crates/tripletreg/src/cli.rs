//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tripletreg_core::data::normalize_values;
use tripletreg_core::eval::r2_score;
use tripletreg_core::nn::{
    round_seed, train_autoencoder_with_progress, train_tnn_with_progress, AeTrainConfig, EpochReport, TnnTrainConfig,
};
use tripletreg_core::reducers::{fit_pca, fit_random_projection, FittedReducer};
use tripletreg_core::regressors::{GbmConfig, RegressorSpec, SvrConfig};
use tripletreg_core::triplets::{mine_triplets, MiningConfig};
use tripletreg_core::{Standardizer, Target};

use crate::error::{Error, Result};
use crate::experiment::{metadata_path, render_table, run_experiment, DatasetPaths, ExperimentConfig, Preset};
use crate::export::export_embeddings;
use crate::io::{load_annotations, load_dataset, load_feature_table, write_embeddings, write_predictions, write_text, write_triplets};
use crate::model_io::{LoadedModel, ModelDocument};

#[derive(Debug, Parser)]
#[command(name = "tripletreg", version, about = "Triplet-network embeddings for music emotion regression")]
pub struct Cli {
    /// Random seed for every stochastic step
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a feature table and an annotation table load and align
    Validate(DataArgs),
    /// Train a triplet embedding network on one label dimension
    TrainTnn(TrainTnnArgs),
    /// Train an autoencoder baseline
    TrainAe(TrainAeArgs),
    /// Embed a feature table with a saved model or a fresh PCA/RP fit
    Reduce(ReduceArgs),
    /// Fit a regressor on one feature table and predict another
    Regress(RegressArgs),
    /// Run a cross-validated experiment grid
    Experiment(ExperimentArgs),
    /// Write embeddings with label-quartile classes for plotting
    ExportEmbeddings(ExportArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Feature CSV (`song_id` column followed by numeric features)
    #[arg(long)]
    pub features: PathBuf,
    /// Annotation CSV with `song_id`, `valence`, `arousal`
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    Valence,
    Arousal,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Target {
        match t {
            TargetArg::Valence => Target::Valence,
            TargetArg::Arousal => Target::Arousal,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainTnnArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    /// Embedding dimension
    #[arg(long, default_value_t = 600)]
    pub dims: usize,
    /// Largest label gap for a positive
    #[arg(long, default_value_t = 0.1)]
    pub delta_p: f64,
    /// Smallest label gap for a negative
    #[arg(long, default_value_t = 0.5)]
    pub delta_n: f64,
    #[arg(long, default_value_t = 0.2)]
    pub margin: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs_per_round: usize,
    #[arg(long, default_value_t = 25)]
    pub rounds: usize,
    #[arg(long, default_value_t = 50_000)]
    pub triplets_per_round: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    /// Model document to write
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the first round's triplets (row indices) to this CSV
    #[arg(long)]
    pub dump_triplets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainAeArgs {
    /// Feature CSV (`song_id` column followed by numeric features)
    #[arg(long)]
    pub features: PathBuf,
    /// Bottleneck dimension
    #[arg(long, default_value_t = 600)]
    pub dims: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Train for all epochs even when the loss has plateaued
    #[arg(long)]
    pub no_early_stop: bool,
    /// Model document to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Pca,
    Rp,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Feature CSV to embed
    #[arg(long)]
    pub features: PathBuf,
    /// Saved model document (TNN, AE, PCA or RP)
    #[arg(long, conflicts_with = "method", required_unless_present = "method")]
    pub model: Option<PathBuf>,
    /// Fit an unsupervised reducer on `--features` instead of loading one
    #[arg(long, value_enum, requires = "dims")]
    pub method: Option<MethodArg>,
    /// Output dimension for `--method`
    #[arg(long)]
    pub dims: Option<usize>,
    /// Write the model fitted by `--method` here
    #[arg(long, requires = "method")]
    pub save_model: Option<PathBuf>,
    /// Embeddings CSV to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegressorArg {
    Svr,
    Gbm,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Training feature (or embedding) CSV
    #[arg(long)]
    pub train: PathBuf,
    /// Feature CSV to predict; must have the same columns as `--train`
    #[arg(long)]
    pub test: PathBuf,
    /// Annotation CSV covering the training songs
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, value_enum, default_value = "svr")]
    pub regressor: RegressorArg,
    /// SVR box constraint
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// SVR tube width
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// SVR RBF width (default 1/d)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// SVR stopping tolerance
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    /// SVR iteration budget in passes over the dual variables
    #[arg(long, default_value_t = 200)]
    pub max_passes: usize,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    /// GBM shrinkage
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub min_samples_leaf: usize,
    /// Predictions CSV to write (normalized label units)
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fitted regressor
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Built-in experiment grid
    #[arg(long, value_parser = ["mediaeval2013", "deam"], required_unless_present = "config", conflicts_with = "config")]
    pub preset: Option<String>,
    /// Experiment config JSON
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding `features.csv` and `annotations.csv`
    #[arg(long, conflicts_with_all = ["features", "annotations"])]
    pub data_dir: Option<PathBuf>,
    #[arg(long, requires = "annotations")]
    pub features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    pub annotations: Option<PathBuf>,
    /// Report JSON to write; run metadata goes next to it as `*.meta.json`
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Saved reducer model document
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Label used for the class column
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long)]
    pub out: PathBuf,
}

fn epoch_logger(name: &'static str) -> impl FnMut(EpochReport) {
    move |r: EpochReport| eprintln!("{name} epoch {}/{} loss {:.6}", r.epoch + 1, r.total_epochs, r.loss)
}

/// Runs a parsed command. The returned string is the one-line summary for
/// stdout.
pub fn run(cli: Cli) -> Result<String> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Validate(a) => validate(&a),
        Command::TrainTnn(a) => train_tnn(&a, seed),
        Command::TrainAe(a) => train_ae(&a, seed),
        Command::Reduce(a) => reduce(&a, seed),
        Command::Regress(a) => regress(&a, seed),
        Command::Experiment(a) => experiment(&a, cli.seed),
        Command::ExportEmbeddings(a) => export(&a),
    }
}

fn validate(a: &DataArgs) -> Result<String> {
    let data = load_dataset(&a.features, &a.annotations)?;
    for t in Target::ALL {
        normalize_values(data.annotations.target(t), t.name())?;
    }
    let x = data.features.values();
    let constant = Standardizer::fit(x).std.iter().filter(|&&s| s == 0.0).count();
    Ok(format!("ok: n={} d={} constant_columns={constant}", x.rows(), x.cols()))
}

fn train_tnn(a: &TrainTnnArgs, seed: u64) -> Result<String> {
    let data = load_dataset(&a.data.features, &a.data.annotations)?;
    let target: Target = a.target.into();
    let labels = normalize_values(data.annotations.target(target), target.name())?;
    let scaler = Standardizer::fit(data.features.values());
    let x = scaler.apply(data.features.values())?;
    let mining = MiningConfig::new(a.delta_p, a.delta_n)?;
    let config = TnnTrainConfig {
        embedding_dim: a.dims,
        triplets_per_round: a.triplets_per_round,
        epochs_per_round: a.epochs_per_round,
        rounds: a.rounds,
        batch_size: a.batch_size,
        margin: a.margin,
        learning_rate: a.lr,
        seed,
    };
    config.validate()?;
    if let Some(path) = &a.dump_triplets {
        let triplets = mine_triplets(&labels, a.triplets_per_round, &mining, round_seed(seed, 0))?;
        write_triplets(path, &triplets)?;
    }
    let model = train_tnn_with_progress(&x, &labels, &mining, &config, &mut epoch_logger("tnn"))?;
    let final_loss = model.training_log.last().copied().unwrap_or(f64::NAN);
    ModelDocument::from_reducer(&FittedReducer::Tnn(model))
        .with_standardizer(scaler)
        .with_target(target)
        .save(&a.out)?;
    Ok(format!(
        "trained tnn: n={} d={} k={} epochs={} final_loss={final_loss:.6} -> {}",
        x.rows(),
        x.cols(),
        a.dims,
        config.total_epochs(),
        a.out.display()
    ))
}

fn train_ae(a: &TrainAeArgs, seed: u64) -> Result<String> {
    let features = load_feature_table(&a.features)?;
    let scaler = Standardizer::fit(features.values());
    let x = scaler.apply(features.values())?;
    let config = AeTrainConfig {
        embedding_dim: a.dims,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed,
        early_stop: !a.no_early_stop,
    };
    let model = train_autoencoder_with_progress(&x, &config, &mut epoch_logger("ae"))?;
    let epochs = model.training_log.len();
    let final_loss = model.training_log.last().copied().unwrap_or(f64::NAN);
    ModelDocument::from_reducer(&FittedReducer::Ae(model))
        .with_standardizer(scaler)
        .save(&a.out)?;
    Ok(format!(
        "trained ae: n={} d={} k={} epochs={epochs} final_mse={final_loss:.6} -> {}",
        x.rows(),
        x.cols(),
        a.dims,
        a.out.display()
    ))
}

fn reduce(a: &ReduceArgs, seed: u64) -> Result<String> {
    let features = load_feature_table(&a.features)?;
    let doc = match (&a.model, a.method) {
        (Some(path), _) => {
            let doc = ModelDocument::load(path)?;
            if !matches!(doc.to_model()?, LoadedModel::Reducer(_)) {
                return Err(Error::Config(format!("{}: `{}` is not a reducer", path.display(), doc.kind())));
            }
            doc
        }
        (None, Some(method)) => {
            let dims = a.dims.expect("clap requires --dims with --method");
            let scaler = Standardizer::fit(features.values());
            let x = scaler.apply(features.values())?;
            let fitted = match method {
                MethodArg::Pca => FittedReducer::Pca(fit_pca(&x, dims)?),
                MethodArg::Rp => FittedReducer::Rp(fit_random_projection(x.cols(), dims, seed)?),
            };
            let doc = ModelDocument::from_reducer(&fitted).with_standardizer(scaler);
            if let Some(path) = &a.save_model {
                doc.save(path)?;
            }
            doc
        }
        (None, None) => unreachable!("clap requires --model or --method"),
    };
    let embeddings = doc.apply(features.values())?;
    write_embeddings(&a.out, features.song_ids(), &embeddings)?;
    Ok(format!(
        "reduced with {}: n={} d={} -> k={} -> {}",
        doc.kind(),
        features.n_rows(),
        features.n_cols(),
        embeddings.cols(),
        a.out.display()
    ))
}

fn regress(a: &RegressArgs, seed: u64) -> Result<String> {
    let train = load_feature_table(&a.train)?;
    let test = load_feature_table(&a.test)?;
    if train.columns() != test.columns() {
        return Err(tripletreg_core::Error::ColumnMismatch.into());
    }
    let target: Target = a.target.into();
    // normalized over every annotated song so train and test share one scale
    let mut annotations = load_annotations(&a.annotations)?;
    let normalized = normalize_values(annotations.target(target), target.name())?;
    match target {
        Target::Valence => annotations.valence = normalized,
        Target::Arousal => annotations.arousal = normalized,
    }
    let y_train = annotations.aligned_to(train.song_ids())?.target(target).to_vec();

    let spec = match a.regressor {
        RegressorArg::Svr => RegressorSpec::Svr(SvrConfig {
            c: a.c,
            epsilon: a.epsilon,
            gamma: a.gamma,
            tolerance: a.tolerance,
            max_passes: a.max_passes,
        }),
        RegressorArg::Gbm => RegressorSpec::Gbm(GbmConfig {
            n_trees: a.n_trees,
            max_depth: a.max_depth,
            learning_rate: a.learning_rate,
            min_samples_leaf: a.min_samples_leaf,
            seed,
        }),
    };
    let scaler = Standardizer::fit(train.values());
    let model = spec.fit(&scaler.apply(train.values())?, &y_train, seed)?;
    let doc = ModelDocument::from_regressor(&model)
        .with_standardizer(scaler)
        .with_target(target);
    if let Some(path) = &a.save_model {
        doc.save(path)?;
    }
    let predictions = doc.apply(test.values())?.into_vec();
    write_predictions(&a.out, test.song_ids(), &predictions)?;

    let mut summary = format!(
        "{} on {}: train n={} test n={} -> {}",
        spec.label(),
        target.name(),
        train.n_rows(),
        test.n_rows(),
        a.out.display()
    );
    // R² only when every test song is annotated
    if let Ok(test_labels) = annotations.aligned_to(test.song_ids()) {
        match r2_score(test_labels.target(target), &predictions) {
            Ok(r2) => summary.push_str(&format!(" r2={r2:.4}")),
            Err(e) => summary.push_str(&format!(" r2=n/a ({})", e.tag())),
        }
    }
    Ok(summary)
}

fn experiment(a: &ExperimentArgs, seed: Option<u64>) -> Result<String> {
    let mut config = match (&a.preset, &a.config) {
        (Some(name), _) => ExperimentConfig::preset(name.parse::<Preset>()?)?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => unreachable!("clap requires --preset or --config"),
    };
    if let Some(dir) = &a.data_dir {
        config.dataset = Some(DatasetPaths {
            features: dir.join("features.csv"),
            annotations: dir.join("annotations.csv"),
        });
    } else if let (Some(f), Some(an)) = (&a.features, &a.annotations) {
        config.dataset = Some(DatasetPaths {
            features: f.clone(),
            annotations: an.clone(),
        });
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    let paths = config
        .dataset
        .clone()
        .ok_or_else(|| Error::Config("no dataset: pass --data-dir, --features/--annotations or set `dataset` in the config".into()))?;
    let data = load_dataset(&paths.features, &paths.annotations)?;
    let (report, meta) = run_experiment(&config, &data, a.jobs, &|line| eprintln!("{line}"))?;
    write_text(&a.out, &report.to_json())?;
    let meta_path = metadata_path(&a.out);
    let mut meta_json = serde_json::to_string_pretty(&meta).expect("metadata is plain data");
    meta_json.push('\n');
    write_text(&meta_path, &meta_json)?;
    print!("{}", render_table(&report));
    if report.any_failed() {
        return Err(Error::CellsFailed(a.out.clone()));
    }
    Ok(format!(
        "experiment {}: {} cells, {} folds -> {}",
        config.preset.name(),
        report.cells.len(),
        report.k_folds,
        a.out.display()
    ))
}

fn export(a: &ExportArgs) -> Result<String> {
    let doc = ModelDocument::load(&a.model)?;
    let data = load_dataset(&a.data.features, &a.data.annotations)?;
    let n = export_embeddings(&doc, &data, a.target.into(), &a.out)?;
    Ok(format!("exported {n} embeddings -> {}", a.out.display()))
}

/// Parses `args` and runs the command, printing the summary to stdout and
/// errors to stderr. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}
