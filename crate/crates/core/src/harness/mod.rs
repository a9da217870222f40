//! Experiment runner: configurations, replicates, result files, grids and
//! summary reports.

mod experiment;
mod grid;
mod report;
mod results;

pub use experiment::{
    run_experiment, ExperimentResult, ReplicateRecord, ResultSummary, Stats, RESULT_FORMAT,
};
pub use grid::{
    desk_grid, run_grid, GridEntry, GridOutcome, GridStatus, DESK_DATASETS, MANIFEST_FILE,
};
pub use report::{group_summaries, report_summary, variance_ratio, GroupSummary};
pub use results::{load_result, write_flat_table, write_results, FLAT_HEADER, FLAT_TABLE_FILE};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{
    bundled, decode_pmlb, load_csv, make_hill_valley, Dataset, PmlbClient, TargetColumn,
};
use crate::error::{Error, Result};
use crate::evolve::GpConfig;
use crate::operators::{default_registry, parse_template, EstimatorFilter, Registry};
use crate::seed;

/// Rows and sequence length of the built-in hill/valley datasets.
pub const HILL_VALLEY_DEFAULT: (usize, usize) = (400, 50);
const HILL_VALLEY_DATA_SEED: u64 = 0;

/// One experiment: a dataset, a search configuration and a replicate count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Built-in name (`hill-valley`, `hill-valley-noisy`, optionally with a
    /// `:NxL` size suffix), bundled or PMLB dataset name, or a label for
    /// `data_path`.
    pub dataset: String,
    /// Local CSV (target column `target` or last) or PMLB-format `.tsv.gz`.
    pub data_path: Option<PathBuf>,
    pub nn_enabled: bool,
    pub template: Option<String>,
    pub estimator_filter: EstimatorFilter,
    pub single_estimator_mode: bool,
    pub generations: usize,
    pub population_size: usize,
    pub cv_folds: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub replicates: usize,
    /// Zero disables the per-evaluation cap.
    pub eval_timeout_s: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "breast-cancer-wisconsin".into(),
            data_path: None,
            nn_enabled: false,
            template: None,
            estimator_filter: EstimatorFilter::All,
            single_estimator_mode: false,
            generations: 5,
            population_size: 20,
            cv_folds: 5,
            train_fraction: 0.8,
            seed: 0,
            replicates: 3,
            eval_timeout_s: 60.0,
        }
    }
}

/// Configuration families compared in the summary report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    /// A lone neural estimator; only hyperparameters evolve.
    #[serde(rename = "NN")]
    Nn,
    /// Free-form search without neural estimators.
    #[serde(rename = "TPOT")]
    Tpot,
    /// Free-form search with neural estimators.
    #[serde(rename = "TPOT-NN")]
    TpotNn,
    /// A lone non-neural estimator.
    #[serde(rename = "Shallow")]
    Shallow,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Nn, Family::Tpot, Family::TpotNn, Family::Shallow];

    pub fn label(self) -> &'static str {
        match self {
            Family::Nn => "NN",
            Family::Tpot => "TPOT",
            Family::TpotNn => "TPOT-NN",
            Family::Shallow => "Shallow",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Options that affect how an experiment runs but not what it computes.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Concurrent evaluations (`run`) or experiments (`grid`).
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
    /// Overrides the PMLB download location.
    pub pmlb_base_url: Option<String>,
}

impl RunOptions {
    pub(crate) fn workers(&self) -> usize {
        self.workers.max(1)
    }
}

impl ExperimentConfig {
    pub fn family(&self) -> Family {
        match (self.single_estimator_mode, self.nn_enabled) {
            (true, _) if self.estimator_filter.is_neural() => Family::Nn,
            (true, _) => Family::Shallow,
            (false, false) => Family::Tpot,
            (false, true) => Family::TpotNn,
        }
    }

    /// Stable identifier: dataset, family and a hash of the full configuration.
    pub fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let slug: String = self
            .dataset
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        format!(
            "{slug}__{}__{:016x}",
            self.family().label().to_ascii_lowercase(),
            seed::derive_str(0, &json)
        )
    }

    pub fn registry(&self) -> Result<Registry> {
        default_registry(self.nn_enabled, self.estimator_filter.clone())
    }

    /// Search configuration for one replicate.
    pub fn gp_config(&self, seed: u64, workers: usize) -> Result<GpConfig> {
        let registry = self.registry()?;
        let template = self
            .template
            .as_deref()
            .map(|t| parse_template(t, &registry))
            .transpose()?;
        let mut gp = GpConfig::new(registry, seed);
        gp.population_size = self.population_size;
        gp.generations = self.generations;
        gp.cv_folds = self.cv_folds;
        gp.eval_timeout_s = self.eval_timeout_s;
        gp.template = template;
        gp.single_estimator_mode = self.single_estimator_mode;
        gp.workers = workers.max(1);
        gp.validate()?;
        Ok(gp)
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.eval_timeout_s < 0.0 || !self.eval_timeout_s.is_finite() {
            return Err(Error::Config(format!(
                "timeout must be a finite number of seconds >= 0, got {}",
                self.eval_timeout_s
            )));
        }
        self.gp_config(self.seed, 1).map(|_| ())
    }
}

fn parse_hill_valley(name: &str) -> Option<Result<Dataset>> {
    let (base, size) = match name.split_once(':') {
        Some((b, s)) => (b, Some(s)),
        None => (name, None),
    };
    let noisy = match base {
        "hill-valley" => false,
        "hill-valley-noisy" => true,
        _ => return None,
    };
    let (n, length) = match size {
        None => HILL_VALLEY_DEFAULT,
        Some(s) => {
            let parsed = s
                .split_once('x')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            match parsed {
                Some(p) => p,
                None => {
                    return Some(Err(Error::Config(format!(
                        "bad size in '{name}', expected NAME:ROWSxLENGTH"
                    ))))
                }
            }
        }
    };
    Some(make_hill_valley(n, length, noisy, HILL_VALLEY_DATA_SEED).map(|d| d.with_name(name)))
}

/// Loads the dataset an experiment names: a local file, a built-in
/// synthetic set, a bundled copy, or a PMLB download (cached).
pub fn resolve_dataset(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Dataset> {
    if let Some(path) = &cfg.data_path {
        let name = path.to_string_lossy();
        let ds = if name.ends_with(".tsv.gz") {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pmlb(&bytes, &cfg.dataset)?
        } else {
            let has_target = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path, e))?
                .lines()
                .next()
                .is_some_and(|h| h.split(',').any(|c| c.trim() == "target"));
            let target = if has_target {
                TargetColumn::Named("target".into())
            } else {
                TargetColumn::Last
            };
            load_csv(path, &target)?
        };
        return Ok(ds.with_name(cfg.dataset.clone()));
    }
    if let Some(ds) = parse_hill_valley(&cfg.dataset) {
        return ds;
    }
    if let Some(cache) = &opts.cache_dir {
        let mut client = PmlbClient::new(cache);
        if let Some(url) = &opts.pmlb_base_url {
            client = client.with_base_url(url.clone());
        }
        if client.cache_path(&cfg.dataset).exists() || bundled(&cfg.dataset).is_none() {
            return client.fetch(&cfg.dataset);
        }
    }
    if let Some(bytes) = bundled(&cfg.dataset) {
        return decode_pmlb(bytes, &cfg.dataset);
    }
    Err(Error::Dataset(format!(
        "unknown dataset '{}': not built in or bundled, and no --cache-dir given for a PMLB download",
        cfg.dataset
    )))
}
