use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{resolve_dataset, ExperimentConfig, Family, RunOptions};
use crate::data::{accuracy, train_test_split};
use crate::error::{Error, Result};
use crate::evolve::{run_evolution, GenerationRecord};
use crate::pipeline::{export_pipeline, fit_pipeline, ExportMetadata};

pub const RESULT_FORMAT: &str = "evopipe-result v1";

/// Summary statistics; `std` is the sample standard deviation (0 for n = 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len();
        if n == 0 {
            return Stats {
                n,
                mean: 0.0,
                min: 0.0,
                max: 0.0,
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Stats {
            n,
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    /// Seeds the train/test split, the search and the final fit.
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub cv_accuracy: f64,
    pub test_accuracy: f64,
    pub complexity: usize,
    /// Search plus final fit, in seconds.
    pub duration_s: f64,
    /// Distinct pipelines evaluated.
    pub evaluations: usize,
    /// Set when the best pipeline could not be refit on the training rows;
    /// its test accuracy is then 0.
    pub fit_error: Option<String>,
    pub best_pipeline: String,
    pub generations: Vec<GenerationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub test_accuracy: Stats,
    pub duration_s: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub format: String,
    pub id: String,
    pub family: Family,
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub summary: ResultSummary,
}

impl ExperimentResult {
    /// A copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> ExperimentResult {
        let mut r = self.clone();
        for rep in &mut r.replicates {
            rep.duration_s = 0.0;
            for g in &mut rep.generations {
                g.elapsed_s = 0.0;
            }
        }
        r.summary.duration_s = Stats::of(&vec![0.0; r.replicates.len()]);
        r
    }
}

/// Runs every replicate: split with `seed + r`, evolve on the training
/// side, refit the most accurate pipeline on all training rows and score it
/// once on the held-out rows.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let data = resolve_dataset(cfg, opts)?;
    let mut replicates = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates {
        let seed = cfg
            .seed
            .checked_add(r as u64)
            .ok_or_else(|| Error::Config("seed + replicate overflows".into()))?;
        let (train, test) = train_test_split(&data, cfg.train_fraction, seed)?;
        let gp = cfg.gp_config(seed, opts.workers())?;
        let started = Instant::now();
        let evo = run_evolution(&gp, &train, &mut |g| {
            log::info!(
                "{} rep {r} gen {}: best {:.4} mean {:.4} front {}",
                data.name(),
                g.generation,
                g.best_accuracy,
                g.mean_accuracy,
                g.front_size
            )
        })?;
        let best = &evo.best;
        let fitness = best.fitness.expect("evaluated");
        let (test_accuracy, fit_error) = match fit_pipeline(&best.tree, &gp.registry, &train, seed)
            .and_then(|p| p.predict(test.features()))
            .and_then(|pred| accuracy(&pred, test.labels()))
        {
            Ok(a) => (a, None),
            Err(e) => (0.0, Some(e.to_string())),
        };
        let duration_s = started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        let meta = ExportMetadata {
            cv_score: Some(fitness.cv_accuracy),
            dataset: Some(data.name().to_string()),
            seed: Some(seed),
        };
        replicates.push(ReplicateRecord {
            replicate: r,
            seed,
            train_rows: train.n_rows(),
            test_rows: test.n_rows(),
            cv_accuracy: fitness.cv_accuracy,
            test_accuracy,
            complexity: fitness.complexity,
            duration_s,
            evaluations: evo.evaluations,
            fit_error,
            best_pipeline: export_pipeline(&best.tree, &meta),
            generations: evo.log,
        });
    }
    let summary = summarise(&replicates);
    Ok(ExperimentResult {
        format: RESULT_FORMAT.to_string(),
        id: cfg.id(),
        family: cfg.family(),
        config: cfg.clone(),
        replicates,
        summary,
    })
}

pub(crate) fn summarise(reps: &[ReplicateRecord]) -> ResultSummary {
    let acc: Vec<f64> = reps.iter().map(|r| r.test_accuracy).collect();
    let dur: Vec<f64> = reps.iter().map(|r| r.duration_s).collect();
    ResultSummary {
        test_accuracy: Stats::of(&acc),
        duration_s: Stats::of(&dur),
    }
}
