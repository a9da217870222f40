use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nsga::{fast_nondominated_sort, select_survivors};
use super::variation::{crossover, init_population, mutate};
use super::{Fitness, GpConfig, Individual};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::{cv_report, PipelineTree};
use crate::seed;

const TAG_CV: u64 = 2;
const TAG_OFFSPRING: u64 = 3;

/// Fitness memo keyed by a tree's canonical text.
#[derive(Debug, Default)]
pub struct FitnessCache {
    map: HashMap<String, Fitness>,
    hits: usize,
}

impl FitnessCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, tree: &PipelineTree) -> Option<Fitness> {
        self.map.get(&tree.canonical_text()).copied()
    }

    /// Distinct trees evaluated so far.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }
}

fn compute_fitness(tree: &PipelineTree, data: &Dataset, cfg: &GpConfig) -> Fitness {
    let complexity = tree.complexity();
    let deadline = (cfg.eval_timeout_s > 0.0 && cfg.eval_timeout_s.is_finite())
        .then(|| Instant::now() + Duration::from_secs_f64(cfg.eval_timeout_s));
    // One CV seed per run: equal trees get equal fitness.
    let cv_seed = seed::derive(cfg.seed, &[TAG_CV]);
    match cv_report(tree, &cfg.registry, data, cfg.cv_folds, cv_seed, deadline) {
        Ok(r) if !r.all_failed() => Fitness {
            cv_accuracy: r.score(),
            complexity,
            failed: false,
        },
        Ok(_) => Fitness::failure(complexity),
        Err(e) => {
            log::debug!("evaluation failed: {e}");
            Fitness::failure(complexity)
        }
    }
}

/// Scores `ind` by k-fold CV accuracy and complexity, reusing the cached
/// fitness of an identical tree when there is one.
pub fn evaluate(
    ind: Individual,
    data: &Dataset,
    cfg: &GpConfig,
    cache: &mut FitnessCache,
) -> Individual {
    let mut batch = [ind];
    evaluate_batch(&mut batch, data, cfg, cache, None);
    let [ind] = batch;
    ind
}

fn evaluate_batch(
    batch: &mut [Individual],
    data: &Dataset,
    cfg: &GpConfig,
    cache: &mut FitnessCache,
    pool: Option<&rayon::ThreadPool>,
) {
    let keys: Vec<String> = batch.iter().map(|i| i.tree.canonical_text()).collect();
    let mut todo: Vec<usize> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if batch[i].fitness.is_some() {
            continue;
        }
        if cache.map.contains_key(k) || todo.iter().any(|&j| keys[j] == *k) {
            cache.hits += 1;
        } else {
            todo.push(i);
        }
    }
    let work = |&i: &usize| compute_fitness(&batch[i].tree, data, cfg);
    let fresh: Vec<Fitness> = match pool {
        Some(p) => p.install(|| todo.par_iter().map(work).collect()),
        None => todo.iter().map(work).collect(),
    };
    for (&i, f) in todo.iter().zip(fresh) {
        cache.map.insert(keys[i].clone(), f);
    }
    for (ind, k) in batch.iter_mut().zip(&keys) {
        if ind.fitness.is_none() {
            ind.fitness = Some(cache.map[k]);
        }
    }
}

/// Summary of one generation's surviving population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_accuracy: f64,
    pub mean_accuracy: f64,
    pub front_size: usize,
    /// Distinct trees evaluated so far.
    pub evaluations: usize,
    /// Seconds since the run started.
    pub elapsed_s: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub population: Vec<Individual>,
    pub pareto_front: Vec<Individual>,
    pub best: Individual,
    pub log: Vec<GenerationRecord>,
    pub evaluations: usize,
    pub cache_hits: usize,
}

fn fitness(ind: &Individual) -> Fitness {
    ind.fitness.expect("evaluated")
}

/// Index of the highest accuracy; ties go to lower complexity, then lower index.
fn best_index(pop: &[Individual]) -> usize {
    (0..pop.len())
        .min_by(|&a, &b| {
            let (fa, fb) = (fitness(&pop[a]), fitness(&pop[b]));
            fb.cv_accuracy
                .total_cmp(&fa.cv_accuracy)
                .then(fa.complexity.cmp(&fb.complexity))
                .then(a.cmp(&b))
        })
        .expect("non-empty population")
}

fn record(
    generation: usize,
    pop: &[Individual],
    cache: &FitnessCache,
    start: Instant,
) -> GenerationRecord {
    let fits: Vec<Fitness> = pop.iter().map(fitness).collect();
    let fronts = fast_nondominated_sort(&fits);
    GenerationRecord {
        generation,
        best_accuracy: fits
            .iter()
            .map(|f| f.cv_accuracy)
            .fold(f64::NEG_INFINITY, f64::max),
        mean_accuracy: fits.iter().map(|f| f.cv_accuracy).sum::<f64>() / fits.len() as f64,
        front_size: fronts.first().map_or(0, Vec::len),
        evaluations: cache.len(),
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}

fn offspring(pop: &[Individual], cfg: &GpConfig, generation: usize, index: usize) -> Individual {
    let mut rng = seed::rng(seed::derive(
        cfg.seed,
        &[TAG_OFFSPRING, generation as u64, index as u64],
    ));
    let u: f64 = rng.random();
    let op_seed: u64 = rng.random();
    let n = pop.len();
    let tree = if u < cfg.mutation_rate {
        mutate(&pop[rng.random_range(0..n)].tree, cfg, op_seed)
    } else if u < cfg.mutation_rate + cfg.crossover_rate {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        crossover(&pop[a].tree, &pop[b].tree, cfg, op_seed)
    } else {
        pop[rng.random_range(0..n)].tree.clone()
    };
    Individual::new(tree, generation)
}

/// Runs the generational loop: evaluate, vary, evaluate offspring, keep the
/// best `population_size` of parents and offspring by NSGA-II ranking.
/// `progress` receives one record for the initial population and one per
/// generation.
pub fn run_evolution(
    cfg: &GpConfig,
    train: &Dataset,
    progress: &mut dyn FnMut(&GenerationRecord),
) -> Result<EvolutionResult> {
    run_evolution_observed(cfg, train, &mut |rec, _| progress(rec))
}

/// [`run_evolution`] whose observer also sees each generation's evaluated
/// population.
pub fn run_evolution_observed(
    cfg: &GpConfig,
    train: &Dataset,
    observer: &mut dyn FnMut(&GenerationRecord, &[Individual]),
) -> Result<EvolutionResult> {
    cfg.validate()?;
    if train.n_rows() < cfg.cv_folds {
        return Err(Error::Config(format!(
            "{} training rows cannot fill {} folds",
            train.n_rows(),
            cfg.cv_folds
        )));
    }
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?,
        )
    } else {
        None
    };
    let start = Instant::now();
    let mut cache = FitnessCache::new();
    let mut pop = init_population(cfg)?;
    evaluate_batch(&mut pop, train, cfg, &mut cache, pool.as_ref());
    let mut log = vec![record(0, &pop, &cache, start)];
    observer(&log[0], &pop);

    for g in 1..=cfg.generations {
        let mut kids: Vec<Individual> = (0..cfg.population_size)
            .map(|i| offspring(&pop, cfg, g, i))
            .collect();
        evaluate_batch(&mut kids, train, cfg, &mut cache, pool.as_ref());
        pop.extend(kids);
        pop = select_survivors(pop, cfg.population_size);
        let rec = record(g, &pop, &cache, start);
        observer(&rec, &pop);
        log.push(rec);
    }

    let fits: Vec<Fitness> = pop.iter().map(fitness).collect();
    let pareto_front = fast_nondominated_sort(&fits)[0]
        .iter()
        .map(|&i| pop[i].clone())
        .collect();
    let best = pop[best_index(&pop)].clone();
    Ok(EvolutionResult {
        pareto_front,
        best,
        log,
        evaluations: cache.len(),
        cache_hits: cache.hits(),
        population: pop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_hill_valley;
    use crate::operators::{default_registry, EstimatorFilter, OperatorInstance};

    fn small_cfg(seed: u64) -> GpConfig {
        let mut c = GpConfig::new(default_registry(false, EstimatorFilter::All).unwrap(), seed);
        c.population_size = 8;
        c.generations = 3;
        c.cv_folds = 3;
        c
    }

    #[test]
    fn cache_hit_on_identical_tree() {
        let ds = make_hill_valley(60, 10, false, 1).unwrap();
        let c = small_cfg(1);
        let mut cache = FitnessCache::new();
        let tree = PipelineTree::single(OperatorInstance::new("GaussianNB", Default::default()));
        let a = evaluate(Individual::new(tree.clone(), 0), &ds, &c, &mut cache);
        let b = evaluate(Individual::new(tree, 0), &ds, &c, &mut cache);
        assert_eq!(a.fitness, b.fitness);
        assert_eq!(cache.len(), 1);
        assert_eq!(cache.hits(), 1);
    }

    #[test]
    fn generations_zero_returns_initial_population() {
        let ds = make_hill_valley(60, 10, false, 2).unwrap();
        let mut c = small_cfg(2);
        c.generations = 0;
        let mut n = 0;
        let r = run_evolution(&c, &ds, &mut |_| n += 1).unwrap();
        assert_eq!(n, 1);
        assert_eq!(r.population.len(), 8);
        let best = fitness(&r.best);
        assert!(r
            .population
            .iter()
            .all(|i| fitness(i).cv_accuracy <= best.cv_accuracy));
    }

    #[test]
    fn run_is_deterministic_and_elitist() {
        let ds = make_hill_valley(60, 10, false, 3).unwrap();
        let c = small_cfg(3);
        let a = run_evolution(&c, &ds, &mut |_| {}).unwrap();
        let mut c2 = c.clone();
        c2.workers = 2;
        let b = run_evolution(&c2, &ds, &mut |_| {}).unwrap();
        assert_eq!(a.population, b.population);
        assert_eq!(a.best, b.best);
        for w in a.log.windows(2) {
            assert!(w[1].best_accuracy >= w[0].best_accuracy);
        }
        assert!(a.population.iter().all(|i| i.tree.is_valid(&c.registry)));
    }
}
