use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evopipe::data::{accuracy, Dataset};
use evopipe::harness::{
    report_summary, resolve_dataset, run_experiment, run_grid, write_results, ExperimentConfig,
    Family, RunOptions, DESK_DATASETS,
};
use evopipe::operators::{default_registry, EstimatorFilter};
use evopipe::pipeline::{cv_score, export_pipeline, fit_pipeline, import_pipeline, ExportMetadata};
use evopipe::{Error, Matrix, Result};

#[derive(Parser)]
#[command(
    name = "evopipe",
    version,
    about = "Evolve classification pipelines with NSGA-II genetic programming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its result file.
    Run(RunArgs),
    /// Run a grid of experiments (default: the desk-scale grid), skipping finished ones.
    Grid(GridArgs),
    /// Summarise result files or directories.
    Report(ReportArgs),
    /// Fit an exported pipeline on a dataset and report its accuracy.
    Fit(FitArgs),
    /// Fit an exported pipeline on a dataset and predict labels for new rows.
    Predict(PredictArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset name: hill-valley, hill-valley-noisy (optional :ROWSxLENGTH), a bundled or PMLB name.
    #[arg(long, default_value = "breast-cancer-wisconsin")]
    dataset: String,
    /// Local CSV (target column `target`, else last) or PMLB-format .tsv.gz file.
    #[arg(long)]
    data_path: Option<PathBuf>,
    /// Directory for downloaded PMLB files.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Enable neural-network estimators.
    #[arg(long)]
    nn: bool,
    /// Structure template, e.g. Selector-Transformer-Classifier.
    #[arg(long)]
    template: Option<String>,
    /// Classifiers to search over: all, lr, mlp, or one classifier name.
    #[arg(long, default_value = "all")]
    estimators: String,
    /// Pipelines are a single estimator; only hyperparameters evolve.
    #[arg(long)]
    single_estimator: bool,
    #[arg(long, default_value_t = 5)]
    generations: usize,
    #[arg(long, default_value_t = 20)]
    population: usize,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    /// Per-evaluation time limit in seconds (0 disables).
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Concurrent pipeline evaluations.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// Datasets to include (repeatable); defaults to the desk-scale pair.
    #[arg(long)]
    dataset: Vec<String>,
    #[arg(long)]
    data_path: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    generations: usize,
    #[arg(long, default_value_t = 20)]
    population: usize,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Concurrent experiments.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Result files or directories; defaults to --out.
    paths: Vec<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Exported pipeline file.
    #[arg(long)]
    pipeline: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Fit seed; defaults to the seed recorded in the export.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    /// Write the export with refreshed metadata here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    pipeline: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// CSV of feature rows to label (a `target` column is ignored).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write labels here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_data(d: &DataArgs) -> Result<Dataset> {
    let cfg = ExperimentConfig {
        dataset: d.dataset.clone(),
        data_path: d.data_path.clone(),
        ..ExperimentConfig::default()
    };
    let opts = RunOptions {
        cache_dir: d.cache_dir.clone(),
        ..RunOptions::default()
    };
    resolve_dataset(&cfg, &opts)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        dataset: a.data.dataset,
        data_path: a.data.data_path,
        nn_enabled: a.nn,
        template: a.template,
        estimator_filter: EstimatorFilter::parse(&a.estimators),
        single_estimator_mode: a.single_estimator,
        generations: a.generations,
        population_size: a.population,
        cv_folds: a.cv_folds,
        train_fraction: a.train_fraction,
        seed: a.seed,
        replicates: a.replicates,
        eval_timeout_s: a.timeout,
    };
    let opts = RunOptions {
        workers: a.workers,
        cache_dir: a.data.cache_dir,
        pmlb_base_url: None,
    };
    let result = run_experiment(&cfg, &opts)?;
    for r in &result.replicates {
        println!(
            "replicate {} seed {}: cv {:.4} test {:.4} complexity {} duration {:.3}s",
            r.replicate, r.seed, r.cv_accuracy, r.test_accuracy, r.complexity, r.duration_s
        );
    }
    let (file, table) = write_results(&result, &a.out)?;
    println!("wrote {} and {}", file.display(), table.display());
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let datasets: Vec<String> = if a.dataset.is_empty() {
        DESK_DATASETS.iter().map(|s| s.to_string()).collect()
    } else {
        a.dataset
    };
    let mut grid = Vec::new();
    for ds in &datasets {
        for family in Family::ALL {
            let base = ExperimentConfig {
                dataset: ds.clone(),
                data_path: a.data_path.clone(),
                generations: a.generations,
                population_size: a.population,
                cv_folds: a.cv_folds,
                train_fraction: a.train_fraction,
                seed: a.seed,
                replicates: a.replicates,
                eval_timeout_s: a.timeout,
                ..ExperimentConfig::default()
            };
            grid.push(base.with_family(family));
        }
    }
    let opts = RunOptions {
        workers: a.workers,
        cache_dir: a.cache_dir,
        pmlb_base_url: None,
    };
    let outcome = run_grid(&grid, &a.out, &opts)?;
    for e in &outcome.entries {
        println!("{}: {}", e.id, e.status);
    }
    println!(
        "wrote {} and {}",
        outcome.manifest.display(),
        outcome.flat_table.display()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let paths = if a.paths.is_empty() {
        vec![a.out]
    } else {
        a.paths
    };
    print!("{}", report_summary(&paths)?);
    Ok(())
}

fn fitted(
    pipeline: &Path,
    data: &DataArgs,
    seed: Option<u64>,
) -> Result<(
    evopipe::pipeline::FittedPipeline,
    Dataset,
    ExportMetadata,
    u64,
)> {
    let registry = default_registry(true, EstimatorFilter::All)?;
    let (tree, meta) = import_pipeline(&read_file(pipeline)?, &registry)?;
    let ds = load_data(data)?;
    let seed = seed.or(meta.seed).unwrap_or(0);
    let fp = fit_pipeline(&tree, &registry, &ds, seed)?;
    Ok((fp, ds, meta, seed))
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let (fp, ds, _, seed) = fitted(&a.pipeline, &a.data, a.seed)?;
    let registry = default_registry(true, EstimatorFilter::All)?;
    let train_acc = accuracy(&fp.predict(ds.features())?, ds.labels())?;
    let cv = cv_score(fp.tree(), &registry, &ds, a.cv_folds, seed)?;
    println!(
        "dataset {} ({} rows): train accuracy {train_acc:.4}, {}-fold cv {cv:.4}",
        ds.name(),
        ds.n_rows(),
        a.cv_folds
    );
    if let Some(out) = a.out {
        let meta = ExportMetadata {
            cv_score: Some(cv),
            dataset: Some(ds.name().to_string()),
            seed: Some(seed),
        };
        write_file(&out, &export_pipeline(fp.tree(), &meta))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn read_features(path: &Path) -> Result<Matrix> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| Error::Parse {
        line,
        column: String::new(),
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| headers[i].trim() != "target")
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 2, e.to_string()))?;
        let row = keep
            .iter()
            .map(|&j| {
                rec[j].trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 2,
                    column: headers[j].to_string(),
                    message: format!("'{}' is not a number", &rec[j]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let (fp, _, _, _) = fitted(&a.pipeline, &a.data, a.seed)?;
    let x = read_features(&a.input)?;
    let labels = fp.predict(&x)?;
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    match a.out {
        Some(out) => write_file(&out, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Report(a) => cmd_report(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
