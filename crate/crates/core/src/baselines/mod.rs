//! Comparison methods: surrogate-ranked NSGA-II, decision-tree NSGA-II, and
//! a two-level global/local GA in the style of AV-Fuzzer.

pub mod nsga2;
pub mod tree;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use nsga2::{crowding_distance, dominates, nondominated_sort, nsga_keys, nsga_order, ParetoRanking};
pub use tree::{DecisionTree, Node, TreeParams};

use crate::dedup::filter_similar;
use crate::evaluation::{Individual, Search};
use crate::evolve::{mate, polynomial_mutate, sample_filtered, sample_many, survival, GaParams};
use crate::grammar::ScenarioVector;
use crate::surrogate::{train_regressor, MlpModel, TrainParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmParams {
    /// Extra simulations run before the search only to train the regressors.
    pub pretrain_samples: usize,
    pub regressor: TrainParams,
}

impl Default for SmParams {
    fn default() -> Self {
        SmParams {
            pretrain_samples: 1000,
            regressor: TrainParams::regressor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtParams {
    pub outer_iters: usize,
    pub tree: TreeParams,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams {
            outer_iters: 5,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvFuzzerParams {
    pub pop_size: usize,
    /// Per-field mutation probability; `None` means `1 / k`.
    pub mutation_rate: Option<f64>,
    pub local_generations: usize,
    pub local_duplicates: usize,
    /// Generations averaged by the stagnation test.
    pub stagnation_window: usize,
    /// Random draws per slot when restarting with farthest-point sampling.
    pub restart_candidates: usize,
}

impl Default for AvFuzzerParams {
    fn default() -> Self {
        AvFuzzerParams {
            pop_size: 4,
            mutation_rate: None,
            local_generations: 5,
            local_duplicates: 4,
            stagnation_window: 5,
            restart_candidates: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmVariant {
    /// Surrogates trained once before the search.
    Sm,
    /// Surrogates retrained every generation, with uniqueness filtering.
    UnSmA,
}

fn folded(ind: &Individual, search: &Search) -> Vec<f64> {
    ind.objectives
        .map(|o| o.folded(search.config.mode).to_vec())
        .unwrap_or_else(|| vec![f64::INFINITY; 3])
}

fn nsga_survival(search: &Search, combined: Vec<Individual>, pop_size: usize) -> Vec<Individual> {
    let objs: Vec<Vec<f64>> = combined.iter().map(|i| folded(i, search)).collect();
    let order = nsga_order(&objs);
    order.into_iter().take(pop_size).map(|i| combined[i].clone()).collect()
}

fn population_keys(search: &Search, population: &[Individual]) -> Vec<f64> {
    let objs: Vec<Vec<f64>> = population.iter().map(|i| folded(i, search)).collect();
    nsga_keys(&objs)
}

fn initial_population(
    search: &mut Search,
    ga: &GaParams,
    initial: Option<Vec<Individual>>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>> {
    match initial {
        Some(p) if !p.is_empty() => Ok(p),
        _ => {
            let first = sample_many(search, ga.pop_size, ga.max_sample_attempts, rng)?;
            Ok(search.evaluate(first))
        }
    }
}

fn train_objective_models(search: &Search, sm: &SmParams, rng: &mut ChaCha8Rng) -> Vec<MlpModel> {
    let xs: Vec<Vec<f64>> = search.history.iter().map(|s| s.x.clone()).collect();
    (0..3)
        .map(|k| {
            let ys: Vec<f64> = search
                .history
                .iter()
                .map(|s| if s.folded[k].is_finite() { s.folded[k] } else { 0.0 })
                .collect();
            train_regressor(&xs, &ys, &sm.regressor, rng.random()).0
        })
        .collect()
}

/// NSGA-II whose offspring are pre-screened by per-objective regression networks.
pub fn run_nsga2_sm(
    search: &mut Search,
    variant: SmVariant,
    ga: &GaParams,
    sm: &SmParams,
    initial: Option<Vec<Individual>>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>> {
    if sm.pretrain_samples > 0 {
        let extra = sample_many(search, sm.pretrain_samples, ga.max_sample_attempts, rng)?;
        search.evaluate_pretrain(extra);
    }
    let mut population = initial_population(search, ga, initial, rng)?;
    let mut models = train_objective_models(search, sm, rng);
    let filters = variant == SmVariant::UnSmA;
    let mut gens = 0;
    while !search.exhausted() && gens < ga.max_gen {
        gens += 1;
        search.generation += 1;
        if variant == SmVariant::UnSmA && gens > 1 {
            models = train_objective_models(search, sm, rng);
        }
        let keys = population_keys(search, &population);
        let target = ga.pop_size * ga.candidate_multiplier.max(1);
        let mut candidates: Vec<ScenarioVector> = Vec::with_capacity(target);
        for _ in 0..ga.max_mating_iter {
            let offspring = mate(search, &population, &keys, target - candidates.len(), ga, rng);
            let offspring = if filters {
                filter_similar(offspring, &search.archive, &candidates)
            } else {
                offspring
            };
            candidates.extend(offspring);
            if candidates.len() >= target {
                break;
            }
        }
        candidates.truncate(target);
        if candidates.len() < target {
            let short = target - candidates.len();
            let fill = if filters {
                sample_filtered(search, short, &candidates, ga, rng)?
            } else {
                sample_many(search, short, ga.max_sample_attempts, rng)?
            };
            candidates.extend(fill);
        }
        let predicted: Vec<Vec<f64>> = candidates
            .iter()
            .map(|c| {
                let x = search.schema.normalize(c);
                models.iter().map(|m| m.forward(&x)).collect()
            })
            .collect();
        let chosen: Vec<ScenarioVector> = nsga_order(&predicted)
            .into_iter()
            .take(ga.pop_size)
            .map(|i| candidates[i].clone())
            .collect();
        let evaluated = search.evaluate(chosen);
        let mut combined = population;
        combined.extend(evaluated);
        population = nsga_survival(search, combined, ga.pop_size);
    }
    Ok(population)
}

/// Critical-region membership test derived from a fitted tree.
struct Region {
    tree: DecisionTree,
    /// `None` means the whole box is critical.
    leaves: Option<Vec<usize>>,
}

impl Region {
    fn fit(search: &Search, dt: &DtParams) -> Region {
        let xs: Vec<Vec<f64>> = search.history.iter().map(|s| s.x.clone()).collect();
        let ys: Vec<bool> = search.history.iter().map(|s| s.violation).collect();
        let tree = DecisionTree::fit(&xs, &ys, dt.tree);
        let critical = tree.critical_leaves();
        let leaves = if tree.has_split() && !critical.is_empty() {
            Some(critical)
        } else {
            log::warn!("decision tree found no critical split; using the whole search box");
            None
        };
        Region { tree, leaves }
    }

    fn contains(&self, search: &Search, v: &ScenarioVector) -> bool {
        match &self.leaves {
            None => true,
            Some(l) => l.contains(&self.tree.leaf_of(&search.schema.normalize(v))),
        }
    }
}

fn sample_in_region(
    search: &Search,
    region: &Region,
    n: usize,
    ga: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ScenarioVector>> {
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 200 * n.max(1) {
        tries += 1;
        let v = search.schema.sample(rng, ga.max_sample_attempts)?;
        if region.contains(search, &v) {
            out.push(v);
        }
    }
    Ok(out)
}

/// NSGA-II restricted to decision-tree critical regions, refitted over
/// `outer_iters` equal slices of the budget.
pub fn run_nsga2_dt(
    search: &mut Search,
    ga: &GaParams,
    dt: &DtParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>> {
    let outer = dt.outer_iters.max(1);
    let total = search.remaining();
    let mut population = Vec::new();
    for it in 0..outer {
        if search.exhausted() {
            break;
        }
        let slice = if it + 1 == outer {
            search.remaining()
        } else {
            total / outer
        };
        let stop_at = search.used + slice;
        let region = Region::fit(search, dt);

        let known: Vec<Individual> = search
            .budgeted_records()
            .filter(|r| region.contains(search, &r.vector))
            .map(|r| Individual {
                vector: r.vector.clone(),
                objectives: Some(r.objectives),
                fitness: Some(r.fitness),
            })
            .collect();
        population = if known.len() >= 2 {
            nsga_survival(search, known, ga.pop_size)
        } else {
            let need = ga.pop_size.min(stop_at - search.used);
            let mut fresh = sample_in_region(search, &region, need, ga, rng)?;
            if fresh.len() < need {
                fresh.extend(sample_many(search, need - fresh.len(), ga.max_sample_attempts, rng)?);
            }
            search.generation += 1;
            search.evaluate(fresh)
        };

        while search.used < stop_at && !search.exhausted() && !population.is_empty() {
            search.generation += 1;
            let keys = population_keys(search, &population);
            let want = ga.pop_size.min(stop_at - search.used);
            let mut cands: Vec<ScenarioVector> = Vec::with_capacity(want);
            for _ in 0..ga.max_mating_iter {
                let offspring = mate(search, &population, &keys, want, ga, rng);
                cands.extend(offspring.into_iter().filter(|v| region.contains(search, v)));
                if cands.len() >= want {
                    break;
                }
            }
            cands.truncate(want);
            if cands.len() < want {
                let mut fill = sample_in_region(search, &region, want - cands.len(), ga, rng)?;
                if cands.len() + fill.len() < want {
                    fill.extend(sample_many(
                        search,
                        want - cands.len() - fill.len(),
                        ga.max_sample_attempts,
                        rng,
                    )?);
                }
                cands.extend(fill);
            }
            let evaluated = search.evaluate(cands);
            let mut combined = population;
            combined.extend(evaluated);
            population = nsga_survival(search, combined, ga.pop_size);
        }
    }
    Ok(population)
}

/// Current best is no better than the mean of the preceding `window` bests.
pub fn stagnated(history: &[f64], window: usize) -> bool {
    if window == 0 || history.len() < window + 1 {
        return false;
    }
    let n = history.len();
    let prev = &history[n - 1 - window..n - 1];
    let avg = prev.iter().sum::<f64>() / window as f64;
    history[n - 1] >= avg
}

fn best_fitness(pop: &[Individual]) -> f64 {
    pop.iter().map(Individual::fit).fold(f64::INFINITY, f64::min)
}

fn ga_generation(
    search: &mut Search,
    population: Vec<Individual>,
    ga: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>> {
    search.generation += 1;
    let keys: Vec<f64> = population.iter().map(Individual::fit).collect();
    let mut off = mate(search, &population, &keys, ga.pop_size, ga, rng);
    if off.len() < ga.pop_size {
        off.extend(sample_many(
            search,
            ga.pop_size - off.len(),
            ga.max_sample_attempts,
            rng,
        )?);
    }
    let evaluated = search.evaluate(off);
    let mut combined = population;
    combined.extend(evaluated);
    let fit: Vec<f64> = combined.iter().map(Individual::fit).collect();
    Ok(survival(&fit, ga.pop_size)
        .into_iter()
        .map(|i| combined[i].clone())
        .collect())
}

/// Pick `n` samples, each the farthest (in normalized space) of several random
/// draws from everything evaluated so far.
fn farthest_samples(
    search: &Search,
    n: usize,
    draws: usize,
    ga: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ScenarioVector>> {
    let mut seen: Vec<Vec<f64>> = search.history.iter().map(|s| s.x.clone()).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(f64, ScenarioVector, Vec<f64>)> = None;
        for _ in 0..draws.max(1) {
            let v = search.schema.sample(rng, ga.max_sample_attempts)?;
            let x = search.schema.normalize(&v);
            let d = seen
                .iter()
                .map(|s| s.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
                best = Some((d, v, x));
            }
        }
        let (_, v, x) = best.expect("at least one draw");
        seen.push(x);
        out.push(v);
    }
    Ok(out)
}

/// Global GA with stagnation-triggered local refinement and diverse restarts.
pub fn run_avfuzzer(
    search: &mut Search,
    ga: &GaParams,
    av: &AvFuzzerParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>> {
    let k = search.schema.dim();
    let rate = av.mutation_rate.unwrap_or(1.0 / k.max(1) as f64);
    let params = GaParams {
        pop_size: av.pop_size.max(2),
        mutation_rate: Some(rate),
        ..ga.clone()
    };
    let first = sample_many(search, params.pop_size, params.max_sample_attempts, rng)?;
    let mut population = search.evaluate(first);
    let mut history = vec![best_fitness(&population)];
    while !search.exhausted() {
        population = ga_generation(search, population, &params, rng)?;
        history.push(best_fitness(&population));
        if !stagnated(&history, av.stagnation_window) {
            continue;
        }
        let best = population
            .iter()
            .min_by(|a, b| a.fit().total_cmp(&b.fit()))
            .expect("non-empty population")
            .vector
            .clone();
        search.generation += 1;
        let local_seeds: Vec<ScenarioVector> = (0..av.local_duplicates.max(1))
            .map(|_| {
                let m = polynomial_mutate(&best, &search.schema, rate, params.eta_m, rng);
                if search.schema.check_constraints(&m).is_empty() {
                    m
                } else {
                    best.clone()
                }
            })
            .collect();
        let mut local = search.evaluate(local_seeds);
        for _ in 0..av.local_generations {
            if search.exhausted() || local.is_empty() {
                break;
            }
            local = ga_generation(search, local, &params, rng)?;
        }
        if search.exhausted() {
            break;
        }
        search.generation += 1;
        let restart = farthest_samples(search, params.pop_size, av.restart_candidates, &params, rng)?;
        population = search.evaluate(restart);
        history = vec![best_fitness(&population)];
    }
    Ok(population)
}
