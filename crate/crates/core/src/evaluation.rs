//! Budgeted scenario evaluation shared by every search method, and the run log.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dedup::{ArchiveEntry, UniquenessParams, ViolationArchive};
use crate::grammar::{ScenarioVector, SearchSpaceSchema};
use crate::objectives::{compute_objectives, fitness, FitnessWeights, ObjectiveVector, ViolationKind, ViolationMode};
use crate::sim::{run_with, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// `wall_time_ms` is the simulated duration; logs stay byte-reproducible.
    #[default]
    Simulated,
    /// `wall_time_ms` is the measured host time of the simulation.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub sim: SimParams,
    pub mode: ViolationMode,
    pub weights: FitnessWeights,
    pub uniqueness: UniquenessParams,
    pub timing: Timing,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            sim: SimParams::default(),
            mode: ViolationMode::Collision,
            weights: FitnessWeights::default(),
            uniqueness: UniquenessParams::default(),
            timing: Timing::Simulated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Seed,
    Search,
    /// Extra samples used only to pre-train surrogates; not budgeted or archived.
    Pretrain,
}

/// One line of `runlog.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub generation: usize,
    pub index: usize,
    pub stage: Stage,
    pub vector: ScenarioVector,
    pub normalized_vector: Vec<f64>,
    pub objectives: ObjectiveVector,
    pub fitness: f64,
    pub violation_kind: Option<ViolationKind>,
    pub unique_flag: bool,
    pub wall_time_ms: f64,
    pub sim_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub vector: ScenarioVector,
    pub objectives: Option<ObjectiveVector>,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(vector: ScenarioVector) -> Self {
        Individual {
            vector,
            objectives: None,
            fitness: None,
        }
    }

    /// Fitness of an evaluated individual; +inf otherwise.
    pub fn fit(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

/// Training example kept for surrogates: normalized input, label, folded objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub violation: bool,
    pub folded: [f64; 3],
}

/// Mutable state of one search: budget, archive, log, and surrogate data.
#[derive(Debug, Clone)]
pub struct Search {
    pub schema: Arc<SearchSpaceSchema>,
    pub config: Arc<EvalConfig>,
    pub archive: ViolationArchive,
    pub log: Vec<RunRecord>,
    pub history: Vec<Sample>,
    pub budget: usize,
    pub used: usize,
    pub generation: usize,
    pub stage: Stage,
    pub run_seed: u64,
}

pub fn sim_seed(run_seed: u64, index: usize) -> u64 {
    let mut z = run_seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct SimResult {
    objectives: ObjectiveVector,
    wall_time_ms: f64,
}

impl Search {
    pub fn new(
        schema: Arc<SearchSpaceSchema>,
        config: Arc<EvalConfig>,
        budget: usize,
        stage: Stage,
        run_seed: u64,
    ) -> Self {
        let archive = ViolationArchive::new(Arc::clone(&schema), config.uniqueness);
        Search {
            schema,
            config,
            archive,
            log: Vec::new(),
            history: Vec::new(),
            budget,
            used: 0,
            generation: 0,
            stage,
            run_seed,
        }
    }

    /// Continue from this state with a fresh budget under another stage label.
    pub fn continue_as(&self, stage: Stage, budget: usize) -> Search {
        let mut s = self.clone();
        s.stage = stage;
        s.budget = budget;
        s.used = 0;
        s
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn mode_kind(&self) -> ViolationKind {
        self.config.mode.kind()
    }

    fn simulate(&self, v: &ScenarioVector, seed: u64) -> SimResult {
        let start = Instant::now();
        let outcome = run_with(&self.schema, v, &self.config.sim, seed);
        let objectives = compute_objectives(&outcome, &outcome.scene.map);
        let wall_time_ms = match self.config.timing {
            Timing::Simulated => outcome.steps as f64 * self.config.sim.dt * 1000.0,
            Timing::Measured => start.elapsed().as_secs_f64() * 1000.0,
        };
        SimResult {
            objectives,
            wall_time_ms,
        }
    }

    fn evaluate_inner(&mut self, vectors: Vec<ScenarioVector>, stage: Stage, archive: bool) -> Vec<Individual> {
        let base = self.log.len();
        let seeds: Vec<u64> = (0..vectors.len()).map(|i| sim_seed(self.run_seed, base + i)).collect();
        let results: Vec<SimResult> = vectors
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(v, &s)| self.simulate(v, s))
            .collect();
        let kind = self.mode_kind();
        let mut out = Vec::with_capacity(vectors.len());
        for (i, (v, r)) in vectors.into_iter().zip(results).enumerate() {
            let fit = fitness(&r.objectives, &self.config.weights, self.config.mode);
            let is_violation = r.objectives.violation_kind == Some(kind);
            let unique_flag = archive
                && is_violation
                && self.archive.insert(ArchiveEntry {
                    vector: v.clone(),
                    kind,
                    objectives: r.objectives,
                    generation: self.generation,
                });
            let normalized = self.schema.normalize(&v);
            self.history.push(Sample {
                x: normalized.clone(),
                violation: is_violation,
                folded: r.objectives.folded(self.config.mode),
            });
            self.log.push(RunRecord {
                generation: self.generation,
                index: base + i,
                stage,
                vector: v.clone(),
                normalized_vector: normalized,
                objectives: r.objectives,
                fitness: fit,
                violation_kind: r.objectives.violation_kind,
                unique_flag,
                wall_time_ms: r.wall_time_ms,
                sim_seed: seeds[i],
            });
            out.push(Individual {
                vector: v,
                objectives: Some(r.objectives),
                fitness: Some(fit),
            });
        }
        out
    }

    /// Simulate as many of `vectors` as the budget allows, in order.
    pub fn evaluate(&mut self, mut vectors: Vec<ScenarioVector>) -> Vec<Individual> {
        vectors.truncate(self.remaining());
        self.used += vectors.len();
        let stage = self.stage;
        self.evaluate_inner(vectors, stage, true)
    }

    /// Simulate outside the budget; results feed surrogates only.
    pub fn evaluate_pretrain(&mut self, vectors: Vec<ScenarioVector>) -> Vec<Individual> {
        self.evaluate_inner(vectors, Stage::Pretrain, false)
    }

    /// Budgeted records of this search's stage (pretraining excluded).
    pub fn budgeted_records(&self) -> impl Iterator<Item = &RunRecord> {
        self.log.iter().filter(|r| r.stage != Stage::Pretrain)
    }
}

pub fn runlog_jsonl(records: &[RunRecord]) -> serde_json::Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}
