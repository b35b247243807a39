use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grople::baseline::RidgeBrModel;
use grople::dataset::MultiLabelDataset;
use grople::experiment::{
    run_cv, run_grid, write_outputs, DatasetSource, EvaluationReport, ExperimentConfig,
};
use grople::grouping::group_labels;
use grople::label_embed::sparsity_mask_csv;
use grople::metrics::MetricReport;
use grople::model_file::Model;
use grople::predictor::{GropleClassifier, Hyperparameters};
use grople::{Error, Matrix, Result};

#[derive(Parser)]
#[command(name = "grople", version, about = "Group-preserving label embedding for multi-label classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it as JSON.
    Fit(FitArgs),
    /// Write {-1,+1} predictions as CSV.
    Predict(ModelDataArgs),
    /// Print the four metrics of a model on a labelled dataset.
    Evaluate(ModelDataArgs),
    /// k-fold cross-validation with per-fold grid selection.
    Cv(RunArgs),
    /// k-fold cross-validation of every grid cell.
    Grid(RunArgs),
    /// Write the label partition as CSV.
    Group(GroupArgs),
    /// Write the per-group nonzero-row mask of a model's V.
    Sparsity(SparsityArgs),
    /// Merge report files and write CSV, rank and critical-difference files.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// MULAN data file.
    #[arg(long)]
    arff: Option<PathBuf>,
    /// MULAN label header.
    #[arg(long)]
    xml: Option<PathBuf>,
    /// CSV cache directory (read if present, written otherwise).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Experiment config; its first dataset is used when no data flags are given.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl DataArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn source(&self, cfg: &ExperimentConfig) -> Result<DatasetSource> {
        if self.arff.is_some() || self.xml.is_some() || self.cache.is_some() {
            let src = DatasetSource {
                name: None,
                arff: self.arff.clone(),
                xml: self.xml.clone(),
                cache: self.cache.clone(),
            };
            let v = src.violations("--arff/--xml/--cache");
            return if v.is_empty() { Ok(src) } else { Err(Error::Config(v)) };
        }
        cfg.datasets.first().cloned().ok_or_else(|| {
            Error::Config(vec!["no dataset: pass --arff and --xml, --cache, or --config".into()])
        })
    }

    fn load(&self) -> Result<(ExperimentConfig, MultiLabelDataset)> {
        let cfg = self.config()?;
        let ds = self.source(&cfg)?.load()?;
        Ok((cfg, ds))
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = ["grople", "ridge-br"], default_value = "grople")]
    method: String,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    ridge_lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    bias: bool,
    /// Keep the training embedding U in the model file.
    #[arg(long)]
    keep_u: bool,
    /// Tune per-label decision thresholds on the training data.
    #[arg(long)]
    calibrate: bool,
    /// Output directory; the model is written to model.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelDataArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output directory (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GroupArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of groups.
    #[arg(long, short)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparsityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON files from `cv` or `grid`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Significance level of the critical difference (0.05 or 0.10).
    #[arg(long, default_value_t = 0.05)]
    cd_alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Writes `text` to `dir/name`, or to stdout without a directory.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            let path = d.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn labels_csv(names: &[String], y: &Matrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names)?;
    for row in y.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn fit(args: FitArgs) -> Result<()> {
    let (cfg, ds) = args.data.load()?;
    let mut hp = match args.data.config {
        Some(_) => cfg.base_hyperparameters(),
        None => Hyperparameters::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {$(
            if let Some(v) = args.$flag { hp.$field = v; }
        )*};
    }
    set!(latent_dim => latent_dim, groups => n_groups, lambda1 => lambda1, lambda2 => lambda2,
         alpha => alpha, beta => beta, seed => seed);
    hp.standardize |= args.standardize;
    hp.bias |= args.bias;
    hp.keep_u |= args.keep_u;
    hp.calibrate_thresholds |= args.calibrate;
    let workers = args.workers.or(cfg.workers);
    let model = grople::experiment::with_workers(workers, || -> Result<Model> {
        Ok(match args.method.as_str() {
            "ridge-br" => {
                let lambda = args
                    .ridge_lambda
                    .or_else(|| args.data.config.as_ref().map(|_| cfg.ridge_lambda.values()[0]))
                    .unwrap_or(1.0);
                Model::RidgeBr(RidgeBrModel::fit(&ds, lambda, hp.standardize, hp.bias)?)
            }
            _ => Model::Grople(GropleClassifier::fit(&ds, &hp)?),
        })
    })??;
    emit(Some(&args.out), "model.json", &model.to_json()?)
}

fn predict(args: ModelDataArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let (_, ds) = args.data.load()?;
    let pred = model.predict(&ds.x)?;
    emit(args.out.as_deref(), "predictions.csv", &labels_csv(model.label_names(), &pred)?)
}

fn evaluate(args: ModelDataArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let (cfg, ds) = args.data.load()?;
    if ds.label_names != model.label_names() {
        return Err(Error::Dimension(
            "dataset labels differ from the model's labels".into(),
        ));
    }
    let pred = model.predict(&ds.x)?;
    let report = MetricReport::compute(&ds.y, &pred, &cfg.conventions)?;
    emit(
        args.out.as_deref(),
        "metrics.json",
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )
}

fn run(args: RunArgs, grid: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(f) = args.folds {
        cfg.folds = f;
    }
    let report = if grid { run_grid(&cfg)? } else { run_cv(&cfg)? };
    for path in write_outputs(&report, cfg.cd_alpha, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    if !grid {
        for d in &report.datasets {
            for m in &d.methods {
                let s = &m.summary;
                println!(
                    "{} {}: accuracy {:.4}±{:.4} example_f1 {:.4}±{:.4} macro_f1 {:.4}±{:.4} micro_f1 {:.4}±{:.4}",
                    d.name,
                    m.method,
                    s["accuracy"].mean,
                    s["accuracy"].std,
                    s["example_f1"].mean,
                    s["example_f1"].std,
                    s["macro_f1"].mean,
                    s["macro_f1"].std,
                    s["micro_f1"].mean,
                    s["micro_f1"].std,
                );
            }
        }
    }
    Ok(())
}

fn group(args: GroupArgs) -> Result<()> {
    let (cfg, ds) = args.data.load()?;
    let k = args.k.unwrap_or_else(|| cfg.base_hyperparameters().n_groups);
    let seed = args.seed.unwrap_or(cfg.seed);
    let partition = group_labels(&ds.y, k, seed, &cfg.grouping)?;
    emit(args.out.as_deref(), "partition.csv", &partition.to_csv(&ds.label_names)?)
}

fn sparsity(args: SparsityArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    emit(args.out.as_deref(), "sparsity.csv", &sparsity_mask_csv(&model.sparsity()?)?)
}

fn report(args: ReportArgs) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            EvaluationReport::from_json(&text).map_err(|e| e.in_file(p))
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = EvaluationReport::merge(reports)?;
    for path in write_outputs(&merged, args.cd_alpha, &args.out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Cv(a) => run(a, false),
        Command::Grid(a) => run(a, true),
        Command::Group(a) => group(a),
        Command::Sparsity(a) => sparsity(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
