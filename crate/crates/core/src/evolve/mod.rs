//! Genetic programming over pipeline trees with NSGA-II selection on
//! (cross-validated accuracy, complexity).

mod nsga;
mod run;
mod variation;

pub use nsga::{crowding_distance, fast_nondominated_sort, select_survivors};
pub use run::{
    evaluate, run_evolution, run_evolution_observed, EvolutionResult, FitnessCache,
    GenerationRecord,
};
pub use variation::{
    applicable_mutations, conforms_to_template, crossover, init_population, mutate, MutationKind,
};

use crate::error::{Error, Result};
use crate::operators::{Registry, TemplateConstraint};
use crate::pipeline::PipelineTree;

/// Bi-objective fitness: accuracy (maximised) and complexity (minimised).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fitness {
    pub cv_accuracy: f64,
    pub complexity: usize,
    pub failed: bool,
}

impl Fitness {
    pub fn failure(complexity: usize) -> Self {
        Fitness {
            cv_accuracy: 0.0,
            complexity,
            failed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub tree: PipelineTree,
    pub fitness: Option<Fitness>,
    pub birth_generation: usize,
}

impl Individual {
    pub fn new(tree: PipelineTree, birth_generation: usize) -> Self {
        Individual {
            tree,
            fitness: None,
            birth_generation,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub cv_folds: usize,
    /// Per-evaluation wall-clock cap in seconds; non-positive or infinite disables it.
    pub eval_timeout_s: f64,
    pub seed: u64,
    pub template: Option<TemplateConstraint>,
    /// Every tree is a lone root classifier; only hyperparameters evolve.
    pub single_estimator_mode: bool,
    pub registry: Registry,
    /// Concurrent evaluations per generation. Results do not depend on it.
    pub workers: usize,
}

impl GpConfig {
    pub fn new(registry: Registry, seed: u64) -> Self {
        GpConfig {
            population_size: 100,
            generations: 100,
            mutation_rate: 0.9,
            crossover_rate: 0.1,
            cv_folds: 5,
            eval_timeout_s: 60.0,
            seed,
            template: None,
            single_estimator_mode: false,
            registry,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            ));
        }
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.mutation_rate)
            || !rate_ok(self.crossover_rate)
            || self.mutation_rate + self.crossover_rate > 1.0
        {
            return bad(format!(
                "mutation_rate {} and crossover_rate {} must be in [0,1] and sum to <= 1",
                self.mutation_rate, self.crossover_rate
            ));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be >= 2, got {}", self.cv_folds));
        }
        if self.eval_timeout_s.is_nan() {
            return bad("eval_timeout_s is NaN".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if self.registry.classifiers().next().is_none() {
            return Err(Error::Registry("registry has no classifiers".into()));
        }
        if let Some(t) = &self.template {
            if self.single_estimator_mode {
                return bad("a template cannot be combined with single-estimator mode".into());
            }
            variation::check_template(t, &self.registry)?;
        }
        Ok(())
    }

    pub(crate) fn structure_fixed(&self) -> bool {
        self.single_estimator_mode || self.template.is_some()
    }
}
