use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::experiment::{run_experiment, ExperimentResult};
use super::results::{load_result, write_flat_table, write_results};
use super::{ExperimentConfig, Family, RunOptions};
use crate::data::write_atomic;
use crate::error::{Error, Result};
use crate::operators::EstimatorFilter;

pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_FORMAT: &str = "evopipe-grid v1";

/// Datasets of the default desk-scale grid.
pub const DESK_DATASETS: [&str; 2] = ["breast-cancer-wisconsin", "hill-valley-noisy"];

impl ExperimentConfig {
    /// This configuration with the search flags of `family`: MLP alone for
    /// NN, Gaussian naive Bayes alone for Shallow, free-form search with or
    /// without neural estimators for TPOT-NN and TPOT.
    pub fn with_family(mut self, family: Family) -> Self {
        let (nn, single, filter) = match family {
            Family::Nn => (true, true, EstimatorFilter::MlpOnly),
            Family::Tpot => (false, false, EstimatorFilter::All),
            Family::TpotNn => (true, false, EstimatorFilter::All),
            Family::Shallow => (false, true, EstimatorFilter::Named("GaussianNB".into())),
        };
        self.nn_enabled = nn;
        self.single_estimator_mode = single;
        self.estimator_filter = filter;
        self.template = None;
        self
    }
}

/// Two datasets × four families, three replicates each, population 20,
/// 5 generations.
pub fn desk_grid(seed: u64) -> Vec<ExperimentConfig> {
    let mut grid = Vec::new();
    for ds in DESK_DATASETS {
        for family in Family::ALL {
            let base = ExperimentConfig {
                dataset: ds.to_string(),
                seed,
                ..ExperimentConfig::default()
            };
            grid.push(base.with_family(family));
        }
    }
    grid
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridStatus {
    Completed,
    /// A result file with this id was already present.
    Skipped,
    Failed(String),
}

impl fmt::Display for GridStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridStatus::Completed => f.write_str("completed"),
            GridStatus::Skipped => f.write_str("skipped (exists)"),
            GridStatus::Failed(e) => write!(f, "failed: {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridEntry {
    pub id: String,
    pub dataset: String,
    pub family: Family,
    pub status: GridStatus,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    /// One entry per configuration, in grid order.
    pub entries: Vec<GridEntry>,
    /// Results of completed and skipped entries, in grid order.
    pub results: Vec<ExperimentResult>,
    pub manifest: PathBuf,
    pub flat_table: PathBuf,
}

fn run_one(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> (GridEntry, Option<ExperimentResult>) {
    let id = cfg.id();
    let path = out_dir.join(format!("{id}.json"));
    let entry = |status, file| GridEntry {
        id: id.clone(),
        dataset: cfg.dataset.clone(),
        family: cfg.family(),
        status,
        file,
    };
    if path.exists() {
        log::info!("{id}: skipped (exists)");
        return match load_result(&path) {
            Ok(r) => (entry(GridStatus::Skipped, Some(path)), Some(r)),
            Err(e) => (entry(GridStatus::Failed(e.to_string()), None), None),
        };
    }
    log::info!("{id}: running");
    match run_experiment(cfg, opts).and_then(|r| write_results(&r, out_dir).map(|(p, _)| (r, p))) {
        Ok((r, p)) => {
            log::info!("{id}: completed");
            (entry(GridStatus::Completed, Some(p)), Some(r))
        }
        Err(e) => {
            log::warn!("{id}: failed: {e}");
            (entry(GridStatus::Failed(e.to_string()), None), None)
        }
    }
}

/// Runs each configuration not already present in `out_dir`, persisting
/// results as they finish. Failed experiments are recorded in the manifest
/// and retried by the next run. With `opts.workers > 1` experiments run
/// concurrently, each with a single evaluation worker.
pub fn run_grid(
    grid: &[ExperimentConfig],
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let mut ids: Vec<String> = grid.iter().map(ExperimentConfig::id).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!(
            "grid lists configuration {} twice",
            w[0]
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let workers = opts.workers();
    let inner = RunOptions {
        workers: 1,
        ..opts.clone()
    };
    let done: Vec<(GridEntry, Option<ExperimentResult>)> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
        pool.install(|| {
            grid.par_iter()
                .map(|c| run_one(c, out_dir, &inner))
                .collect()
        })
    } else {
        grid.iter().map(|c| run_one(c, out_dir, &inner)).collect()
    };

    let (entries, results): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    let results: Vec<ExperimentResult> = results.into_iter().flatten().collect();
    let manifest = serde_json::json!({
        "format": MANIFEST_FORMAT,
        "entries": entries.iter().map(|e| serde_json::json!({
            "id": e.id,
            "dataset": e.dataset,
            "family": e.family.label(),
            "status": e.status.to_string(),
            "file": e.file.as_ref().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()),
        })).collect::<Vec<_>>(),
    });
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    text.push('\n');
    write_atomic(&manifest_path, text.as_bytes())?;
    let flat_table = write_flat_table(out_dir)?;
    Ok(GridOutcome {
        entries,
        results,
        manifest: manifest_path,
        flat_table,
    })
}
