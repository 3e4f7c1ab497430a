//! Genetic search over scenario vectors with optional uniqueness filtering,
//! surrogate ranking, and gradient mutation.

pub mod operators;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use operators::{polynomial_mutate, sbx_crossover, survival, tournament_select};

use crate::dedup::filter_similar;
use crate::evaluation::{Individual, Search};
use crate::grammar::{ScenarioVector, DEFAULT_MAX_ATTEMPTS};
use crate::surrogate::{
    compute_th_conf1, gradient_mutate, rank_and_select, train_classifier, GradMutationParams, TrainParams,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub pop_size: usize,
    pub max_gen: usize,
    pub eta_crossover: f64,
    pub p_crossover: f64,
    /// Per-field mutation probability; `None` means `5 / k`.
    pub mutation_rate: Option<f64>,
    pub eta_m: f64,
    pub candidate_multiplier: usize,
    pub max_mating_iter: usize,
    /// The surrogate is used in generations strictly after this one.
    pub generation_to_use_nn: usize,
    pub max_sample_attempts: usize,
    pub classifier: TrainParams,
    pub grad: GradMutationParams,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            pop_size: 50,
            max_gen: 1000,
            eta_crossover: 5.0,
            p_crossover: 0.8,
            mutation_rate: None,
            eta_m: 5.0,
            candidate_multiplier: 5,
            max_mating_iter: 5,
            generation_to_use_nn: 0,
            max_sample_attempts: DEFAULT_MAX_ATTEMPTS,
            classifier: TrainParams::classifier(),
            grad: GradMutationParams::default(),
        }
    }
}

impl GaParams {
    pub fn mutation_rate_for(&self, k: usize) -> f64 {
        self.mutation_rate.unwrap_or(5.0 / k.max(1) as f64).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaVariant {
    Random,
    Ga,
    GaUn,
    GaUnNn,
    GaUnNnGrad,
    RandomUnNnGrad,
}

impl GaVariant {
    pub fn filters(self) -> bool {
        !matches!(self, GaVariant::Random | GaVariant::Ga)
    }

    pub fn uses_nn(self) -> bool {
        matches!(
            self,
            GaVariant::GaUnNn | GaVariant::GaUnNnGrad | GaVariant::RandomUnNnGrad
        )
    }

    pub fn uses_grad(self) -> bool {
        matches!(self, GaVariant::GaUnNnGrad | GaVariant::RandomUnNnGrad)
    }

    fn random_candidates(self) -> bool {
        matches!(self, GaVariant::Random | GaVariant::RandomUnNnGrad)
    }
}

/// Draw `n` feasible vectors.
pub fn sample_many(search: &Search, n: usize, attempts: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ScenarioVector>> {
    (0..n)
        .map(|_| search.schema.sample(rng, attempts).map_err(Into::into))
        .collect()
}

/// Draw up to `n` vectors that pass the uniqueness filter against the archive
/// and `pending`, then fill any shortfall with unfiltered draws.
pub fn sample_filtered(
    search: &Search,
    n: usize,
    pending: &[ScenarioVector],
    params: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ScenarioVector>> {
    let mut out: Vec<ScenarioVector> = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 20 * n.max(1) {
        tries += 1;
        let v = search.schema.sample(rng, params.max_sample_attempts)?;
        let mut seen = pending.to_vec();
        seen.extend(out.iter().cloned());
        if !filter_similar(vec![v.clone()], &search.archive, &seen).is_empty() {
            out.push(v);
        }
    }
    while out.len() < n {
        out.push(search.schema.sample(rng, params.max_sample_attempts)?);
    }
    Ok(out)
}

/// Offspring by tournament selection, SBX, and polynomial mutation; children
/// violating a linear constraint are dropped.
///
/// `keys` ranks the population for the tournament (lower is better).
pub fn mate(
    search: &Search,
    population: &[Individual],
    keys: &[f64],
    n: usize,
    params: &GaParams,
    rng: &mut ChaCha8Rng,
) -> Vec<ScenarioVector> {
    let schema = &search.schema;
    let n_pairs = n.div_ceil(2);
    let winners = tournament_select(keys, 2 * n_pairs, rng);
    let rate = params.mutation_rate_for(schema.dim());
    let mut out = Vec::with_capacity(2 * n_pairs);
    for pair in winners.chunks(2) {
        let (a, b) = (&population[pair[0]].vector, &population[pair[1]].vector);
        let (c1, c2) = sbx_crossover(a, b, schema, params.eta_crossover, params.p_crossover, rng);
        for c in [c1, c2] {
            let m = polynomial_mutate(&c, schema, rate, params.eta_m, rng);
            if schema.check_constraints(&m).is_empty() {
                out.push(m);
            }
        }
    }
    out.truncate(n);
    out
}

/// Per-generation diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub generation: usize,
    pub candidates: usize,
    pub topped_up: usize,
    pub nn_active: bool,
    pub single_class: bool,
    pub mutated: usize,
}

/// Candidate offspring for the next generation: repeated mating with
/// optional uniqueness filtering, topped up by sampling.
#[allow(clippy::too_many_arguments)]
pub fn propose(
    search: &Search,
    population: &[Individual],
    keys: &[f64],
    variant: GaVariant,
    target: usize,
    params: &GaParams,
    rng: &mut ChaCha8Rng,
    info: &mut GenerationInfo,
) -> Result<Vec<ScenarioVector>> {
    let mut candidates: Vec<ScenarioVector> = Vec::with_capacity(target);
    if variant.random_candidates() {
        return if variant.filters() {
            sample_filtered(search, target, &[], params, rng)
        } else {
            sample_many(search, target, params.max_sample_attempts, rng)
        };
    }
    for _ in 0..params.max_mating_iter {
        let need = target - candidates.len();
        let offspring = mate(search, population, keys, need, params, rng);
        let offspring = if variant.filters() {
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
        info.topped_up = short;
        let fill = if variant.filters() {
            sample_filtered(search, short, &candidates, params, rng)?
        } else {
            sample_many(search, short, params.max_sample_attempts, rng)?
        };
        candidates.extend(fill);
    }
    Ok(candidates)
}

/// Rank candidates with a freshly trained classifier and optionally apply
/// gradient mutation to the selected ones.
fn apply_surrogate(
    search: &Search,
    candidates: Vec<ScenarioVector>,
    variant: GaVariant,
    params: &GaParams,
    rng: &mut ChaCha8Rng,
    info: &mut GenerationInfo,
) -> Vec<ScenarioVector> {
    let pop = params.pop_size;
    let xs: Vec<Vec<f64>> = search.history.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<bool> = search.history.iter().map(|s| s.violation).collect();
    if xs.len() < 2 {
        return candidates.into_iter().take(pop).collect();
    }
    let (model, report) = train_classifier(&xs, &ys, &params.classifier, rng.random());
    info.single_class = report.single_class;
    if report.single_class {
        log::debug!(
            "generation {}: single-class training data, keeping candidate order",
            search.generation
        );
        return candidates.into_iter().take(pop).collect();
    }
    let normalized: Vec<Vec<f64>> = candidates.iter().map(|c| search.schema.normalize(c)).collect();
    let ranked = rank_and_select(&model, &normalized, candidates.len());
    if !variant.uses_grad() {
        return ranked.into_iter().take(pop).map(|i| candidates[i].clone()).collect();
    }
    let conf: Vec<f64> = xs.iter().map(|x| model.forward(x)).collect();
    let p = 100.0 * ys.iter().filter(|&&y| y).count() as f64 / ys.len() as f64;
    let th1 = compute_th_conf1(&conf, p);
    // A perturbed vector may land next to another member of the batch; such
    // candidates fall back to their original, or are replaced by the next ranked.
    let mut accepted: Vec<ScenarioVector> = Vec::with_capacity(pop);
    for i in ranked {
        if accepted.len() == pop {
            break;
        }
        let v = &candidates[i];
        let m = gradient_mutate(v, &model, &params.grad, th1, &search.archive, &search.schema);
        let changed = m.vector != *v;
        let keep = [(m.vector, changed), (v.clone(), false)]
            .into_iter()
            .find(|(c, _)| !filter_similar(vec![c.clone()], &search.archive, &accepted).is_empty());
        if let Some((c, mutated)) = keep {
            info.mutated += usize::from(mutated);
            accepted.push(c);
        }
    }
    accepted
}

/// Run one of the GA-family variants until the budget or `max_gen` is spent.
///
/// `initial` is an already evaluated population (e.g. from seed collection);
/// without one, generation 0 samples and evaluates `pop_size` vectors.
pub fn run_ga(
    search: &mut Search,
    variant: GaVariant,
    params: &GaParams,
    initial: Option<Vec<Individual>>,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Individual>, Vec<GenerationInfo>)> {
    let pop_size = params.pop_size.max(2);
    let mut infos = Vec::new();
    let mut population = match initial {
        Some(p) if !p.is_empty() => p,
        _ => {
            let first = sample_many(search, pop_size, params.max_sample_attempts, rng)?;
            let evaluated = search.evaluate(first);
            infos.push(GenerationInfo {
                generation: search.generation,
                candidates: evaluated.len(),
                ..Default::default()
            });
            evaluated
        }
    };
    let mut gens = 0;
    while !search.exhausted() && gens < params.max_gen {
        gens += 1;
        search.generation += 1;
        let mut info = GenerationInfo {
            generation: search.generation,
            ..Default::default()
        };
        let nn_active = variant.uses_nn() && search.generation > params.generation_to_use_nn;
        info.nn_active = nn_active;
        let target = if nn_active {
            pop_size * params.candidate_multiplier.max(1)
        } else {
            pop_size
        };
        let keys: Vec<f64> = population.iter().map(Individual::fit).collect();
        let mut offspring = propose(search, &population, &keys, variant, target, params, rng, &mut info)?;
        info.candidates = offspring.len();
        if nn_active {
            offspring = apply_surrogate(search, offspring, variant, params, rng, &mut info);
        }
        offspring.truncate(pop_size);
        if offspring.len() < pop_size {
            let fill = sample_filtered(search, pop_size - offspring.len(), &offspring, params, rng)?;
            info.topped_up += fill.len();
            offspring.extend(fill);
        }
        let evaluated = search.evaluate(offspring);
        infos.push(info);
        if variant == GaVariant::Random || variant == GaVariant::RandomUnNnGrad {
            population = evaluated;
            continue;
        }
        let mut combined = population;
        combined.extend(evaluated);
        let fit: Vec<f64> = combined.iter().map(Individual::fit).collect();
        let keep = survival(&fit, pop_size);
        population = keep.into_iter().map(|i| combined[i].clone()).collect();
    }
    Ok((population, infos))
}
