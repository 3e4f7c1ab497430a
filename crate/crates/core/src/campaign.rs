//! Experiment orchestration: configuration, repetitions, output files,
//! statistics across runs, replay, curves, and threshold sweeps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_avfuzzer, run_nsga2_dt, run_nsga2_sm, AvFuzzerParams, DtParams, SmParams, SmVariant};
use crate::dedup::{ArchiveEntry, UniquenessParams, ViolationArchive};
use crate::evaluation::{runlog_jsonl, sim_seed, EvalConfig, Individual, RunRecord, Search, Stage, Timing};
use crate::evolve::{run_ga, GaParams, GaVariant};
use crate::grammar::{parse_schema, SearchSpaceSchema};
use crate::objectives::{FitnessWeights, ViolationMode};
use crate::sim::{run_with, SimParams, SimulationOutcome};
use crate::stats::{vargha_delaney_a12, wilcoxon_rank_sum};
use crate::{Error, Result};

/// A search method, written as in `GA-UN-NN-GRAD` or `GA-UN-NN-GRAD(0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Ga(GaVariant),
    /// Gradient-mutation variant with an explicit perturbation bound.
    GaGradEpsilon(f64),
    Nsga2Sm,
    Nsga2UnSmA,
    Nsga2Dt,
    AvFuzzer,
}

const GA_NAMES: [(&str, GaVariant); 6] = [
    ("RANDOM", GaVariant::Random),
    ("GA", GaVariant::Ga),
    ("GA-UN", GaVariant::GaUn),
    ("GA-UN-NN", GaVariant::GaUnNn),
    ("GA-UN-NN-GRAD", GaVariant::GaUnNnGrad),
    ("RANDOM-UN-NN-GRAD", GaVariant::RandomUnNnGrad),
];

impl Method {
    pub fn ga_variant(self) -> Option<GaVariant> {
        match self {
            Method::Ga(v) => Some(v),
            Method::GaGradEpsilon(_) => Some(GaVariant::GaUnNnGrad),
            _ => None,
        }
    }

    /// Methods whose search avoids re-running similar scenarios.
    pub fn filters(self) -> bool {
        match self {
            Method::Nsga2UnSmA => true,
            _ => self.ga_variant().is_some_and(GaVariant::filters),
        }
    }

    pub fn uses_seed_stage(self) -> bool {
        self != Method::AvFuzzer
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ga(v) => {
                let name = GA_NAMES.iter().find(|(_, g)| g == v).map(|(n, _)| *n).unwrap_or("GA");
                f.write_str(name)
            }
            Method::GaGradEpsilon(e) => write!(f, "GA-UN-NN-GRAD({e})"),
            Method::Nsga2Sm => f.write_str("NSGA2-SM"),
            Method::Nsga2UnSmA => f.write_str("NSGA2-UN-SM-A"),
            Method::Nsga2Dt => f.write_str("NSGA2-DT"),
            Method::AvFuzzer => f.write_str("AV-FUZZER"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        let name = s.trim().to_ascii_uppercase().replace('_', "-");
        if let Some(&(_, v)) = GA_NAMES.iter().find(|(n, _)| *n == name) {
            return Ok(Method::Ga(v));
        }
        if let Some(arg) = name.strip_prefix("GA-UN-NN-GRAD(").and_then(|r| r.strip_suffix(')')) {
            let eps: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad epsilon in method `{s}`")))?;
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive in `{s}`")));
            }
            return Ok(Method::GaGradEpsilon(eps));
        }
        match name.as_str() {
            "NSGA2-SM" => Ok(Method::Nsga2Sm),
            "NSGA2-UN-SM-A" => Ok(Method::Nsga2UnSmA),
            "NSGA2-DT" => Ok(Method::Nsga2Dt),
            "AV-FUZZER" | "AVFUZZER" => Ok(Method::AvFuzzer),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Method, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Whether seed-collection simulations count toward the budget and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    /// `budget` is spent by the method alone; the seed stage is reported separately.
    #[default]
    ExcludeSeedStage,
    /// `budget` covers seed collection and the method together.
    IncludeSeedStage,
}

impl FromStr for Accounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Accounting> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exclude" | "exclude_seed_stage" => Ok(Accounting::ExcludeSeedStage),
            "include" | "include_seed_stage" => Ok(Accounting::IncludeSeedStage),
            _ => Err(Error::Config(format!("unknown accounting mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedCollection {
    pub method: Method,
    pub budget: usize,
}

impl Default for SeedCollection {
    fn default() -> Self {
        SeedCollection {
            method: Method::Ga(GaVariant::GaUn),
            budget: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Relative paths resolve against the config file's directory.
    pub schema_path: PathBuf,
    pub method: Method,
    pub violation_mode: ViolationMode,
    pub budget: usize,
    pub seed_collection: SeedCollection,
    pub th1: f64,
    pub th2: f64,
    pub weights: FitnessWeights,
    pub repetitions: usize,
    pub rng_seed: u64,
    pub accounting: Accounting,
    pub timing: Timing,
    pub sim: SimParams,
    pub ga: GaParams,
    pub sm: SmParams,
    pub dt: DtParams,
    pub avfuzzer: AvFuzzerParams,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            schema_path: PathBuf::from("schema.json"),
            method: Method::Ga(GaVariant::GaUnNnGrad),
            violation_mode: ViolationMode::Collision,
            budget: 700,
            seed_collection: SeedCollection::default(),
            th1: 10.0,
            th2: 50.0,
            weights: FitnessWeights::default(),
            repetitions: 1,
            rng_seed: 0,
            accounting: Accounting::ExcludeSeedStage,
            timing: Timing::Simulated,
            sim: SimParams::default(),
            ga: GaParams::default(),
            sm: SmParams::default(),
            dt: DtParams::default(),
            avfuzzer: AvFuzzerParams::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<CampaignConfig> {
        let c: CampaignConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Load a config file, resolving `schema_path` against its directory.
    pub fn load(path: &Path) -> Result<CampaignConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = CampaignConfig::from_json(&text)?;
        if c.schema_path.is_relative() {
            if let Some(dir) = path.parent() {
                c.schema_path = dir.join(&c.schema_path);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.budget == 0 {
            return fail("budget must be positive".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if !UniquenessParams::new(self.th1, self.th2).is_valid() {
            return fail(format!("thresholds out of range: th1 {} th2 {}", self.th1, self.th2));
        }
        if !self.weights.is_valid() {
            return fail("weights must be finite and non-negative".into());
        }
        if self.seed_collection.method.ga_variant().is_none() {
            return fail(format!(
                "seed collection needs a GA-family method, got {}",
                self.seed_collection.method
            ));
        }
        if self.ga.pop_size < 2 {
            return fail("ga.pop_size must be at least 2".into());
        }
        if self.accounting == Accounting::IncludeSeedStage
            && self.method.uses_seed_stage()
            && self.budget <= self.seed_collection.budget
        {
            return fail(format!(
                "budget {} leaves nothing after a seed stage of {}",
                self.budget, self.seed_collection.budget
            ));
        }
        Ok(())
    }

    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            sim: self.sim.clone(),
            mode: self.violation_mode,
            weights: self.weights,
            uniqueness: UniquenessParams::new(self.th1, self.th2),
            timing: self.timing,
        }
    }

    pub fn seed_budget(&self) -> usize {
        if self.method.uses_seed_stage() {
            self.seed_collection.budget
        } else {
            0
        }
    }

    /// Simulations granted to the method itself.
    pub fn method_budget(&self) -> usize {
        match self.accounting {
            Accounting::ExcludeSeedStage => self.budget,
            Accounting::IncludeSeedStage => self.budget - self.seed_budget(),
        }
    }
}

/// Result of one repetition.
#[derive(Debug, Clone)]
pub struct Repetition {
    pub index: usize,
    /// Every record, seed stage and pretraining included.
    pub log: Vec<RunRecord>,
    pub archive: ViolationArchive,
    pub seed_archive_len: usize,
    pub elapsed_secs: f64,
}

impl Repetition {
    /// Records covered by the accounting mode (pretraining included, tagged).
    pub fn reported<'a>(&'a self, accounting: Accounting) -> impl Iterator<Item = &'a RunRecord> + 'a {
        self.log
            .iter()
            .filter(move |r| accounting == Accounting::IncludeSeedStage || r.stage != Stage::Seed)
    }
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    sim_seed(seed, stream as usize)
}

fn run_method(
    method: Method,
    search: &mut Search,
    config: &CampaignConfig,
    initial: Option<Vec<Individual>>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    match method {
        Method::Ga(v) => run_ga(search, v, &config.ga, initial, rng).map(|_| ()),
        Method::GaGradEpsilon(eps) => {
            let mut ga = config.ga.clone();
            ga.grad.epsilon = eps;
            run_ga(search, GaVariant::GaUnNnGrad, &ga, initial, rng).map(|_| ())
        }
        Method::Nsga2Sm => run_nsga2_sm(search, SmVariant::Sm, &config.ga, &config.sm, initial, rng).map(|_| ()),
        Method::Nsga2UnSmA => run_nsga2_sm(search, SmVariant::UnSmA, &config.ga, &config.sm, initial, rng).map(|_| ()),
        Method::Nsga2Dt => run_nsga2_dt(search, &config.ga, &config.dt, rng).map(|_| ()),
        Method::AvFuzzer => run_avfuzzer(search, &config.ga, &config.avfuzzer, rng).map(|_| ()),
    }
}

/// Run a single repetition: the shared seed stage (unless the method has none),
/// then the method.
pub fn run_repetition(schema: &Arc<SearchSpaceSchema>, config: &CampaignConfig, index: usize) -> Result<Repetition> {
    let start = Instant::now();
    let eval = Arc::new(config.eval_config());
    let rep_seed = derive_seed(config.rng_seed, index as u64);
    let mut seed_stage = Search::new(Arc::clone(schema), eval, config.seed_budget(), Stage::Seed, rep_seed);
    let mut initial = None;
    if config.seed_budget() > 0 {
        let variant = config.seed_collection.method.ga_variant().expect("validated");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, 1));
        let (pop, _) = run_ga(&mut seed_stage, variant, &config.ga, None, &mut rng)?;
        initial = Some(pop);
    }
    let seed_archive_len = seed_stage.archive.len();
    let mut search = seed_stage.continue_as(Stage::Search, config.method_budget());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, 2));
    run_method(config.method, &mut search, config, initial, &mut rng)?;
    Ok(Repetition {
        index,
        log: search.log,
        archive: search.archive,
        seed_archive_len,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Cumulative unique-violation count after each reported simulation.
pub fn unique_curve<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Vec<usize> {
    let mut count = 0;
    records
        .into_iter()
        .filter(|r| r.stage != Stage::Pretrain)
        .map(|r| {
            count += usize::from(r.unique_flag);
            count
        })
        .collect()
}

/// Per-method counts reported by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    pub unique_violations: Vec<usize>,
    pub violations: Vec<usize>,
    pub mean_unique: f64,
    /// Unique violations as a percentage of all violations, pooled over repetitions.
    pub unique_percentage: f64,
}

impl MethodStats {
    fn new(method: String, unique: Vec<usize>, violations: Vec<usize>) -> MethodStats {
        let total_u: usize = unique.iter().sum();
        let total_v: usize = violations.iter().sum();
        MethodStats {
            mean_unique: total_u as f64 / unique.len().max(1) as f64,
            unique_percentage: if total_v == 0 {
                100.0
            } else {
                100.0 * total_u as f64 / total_v as f64
            },
            method,
            unique_violations: unique,
            violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseStats {
    pub a: String,
    pub b: String,
    pub p_value: f64,
    /// Probability that a repetition of `a` finds more unique violations than one of `b`.
    pub a12: f64,
    pub a12_ci_low: f64,
    pub a12_ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub methods: Vec<MethodStats>,
    pub pairs: Vec<PairwiseStats>,
}

const BOOTSTRAP_SEED: u64 = 0x5eed;

impl StatsReport {
    pub fn from_methods(methods: Vec<MethodStats>) -> StatsReport {
        let mut pairs = Vec::new();
        for i in 0..methods.len() {
            for j in (i + 1)..methods.len() {
                let a: Vec<f64> = methods[i].unique_violations.iter().map(|&c| c as f64).collect();
                let b: Vec<f64> = methods[j].unique_violations.iter().map(|&c| c as f64).collect();
                let e = vargha_delaney_a12(&a, &b, BOOTSTRAP_SEED);
                pairs.push(PairwiseStats {
                    a: methods[i].method.clone(),
                    b: methods[j].method.clone(),
                    p_value: wilcoxon_rank_sum(&a, &b),
                    a12: e.a12,
                    a12_ci_low: e.ci_low,
                    a12_ci_high: e.ci_high,
                });
            }
        }
        StatsReport { methods, pairs }
    }
}

/// Written as `summary.json` next to the run outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub violation_mode: ViolationMode,
    pub accounting: Accounting,
    pub budget: usize,
    pub seed_budget: usize,
    pub repetitions: usize,
    pub stats: MethodStats,
    /// Reported (budgeted) simulations per repetition.
    pub simulations: Vec<usize>,
    pub pretrain_simulations: Vec<usize>,
    pub elapsed_secs: f64,
    pub simulations_per_sec: f64,
}

/// Everything a finished campaign produced, before or after writing to disk.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub repetitions: Vec<Repetition>,
    pub summary: RunSummary,
}

impl CampaignResult {
    pub fn curves(&self) -> Vec<Vec<usize>> {
        self.repetitions
            .iter()
            .map(|r| unique_curve(r.reported(self.config.accounting)))
            .collect()
    }

    pub fn stats(&self) -> StatsReport {
        StatsReport::from_methods(vec![self.summary.stats.clone()])
    }
}

/// Execute all repetitions (in parallel) and summarize them.
pub fn run_campaign(schema: Arc<SearchSpaceSchema>, config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let start = Instant::now();
    let repetitions: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|i| run_repetition(&schema, config, i))
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let kind = config.violation_mode.kind();
    let mut unique = Vec::new();
    let mut violations = Vec::new();
    let mut sims = Vec::new();
    let mut pretrain = Vec::new();
    for rep in &repetitions {
        let budgeted: Vec<&RunRecord> = rep
            .reported(config.accounting)
            .filter(|r| r.stage != Stage::Pretrain)
            .collect();
        unique.push(budgeted.iter().filter(|r| r.unique_flag).count());
        violations.push(budgeted.iter().filter(|r| r.violation_kind == Some(kind)).count());
        sims.push(budgeted.len());
        pretrain.push(rep.log.iter().filter(|r| r.stage == Stage::Pretrain).count());
    }
    let total_sims: usize = repetitions.iter().map(|r| r.log.len()).sum();
    let cpu_secs: f64 = repetitions.iter().map(|r| r.elapsed_secs).sum();
    let summary = RunSummary {
        method: config.method.to_string(),
        violation_mode: config.violation_mode,
        accounting: config.accounting,
        budget: config.budget,
        seed_budget: config.seed_budget(),
        repetitions: config.repetitions,
        stats: MethodStats::new(config.method.to_string(), unique, violations),
        simulations: sims,
        pretrain_simulations: pretrain,
        elapsed_secs: elapsed,
        simulations_per_sec: if cpu_secs > 0.0 {
            total_sims as f64 / cpu_secs
        } else {
            0.0
        },
    };
    Ok(CampaignResult {
        config: config.clone(),
        repetitions,
        summary,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Directory holding one repetition's log and archive.
pub fn repetition_dir(out_dir: &Path, index: usize, repetitions: usize) -> PathBuf {
    if repetitions == 1 {
        out_dir.to_path_buf()
    } else {
        out_dir.join(format!("rep_{index}"))
    }
}

pub fn curves_csv(method: &str, curves: &[Vec<usize>]) -> String {
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::from("method,simulations");
    for i in 0..curves.len() {
        out.push_str(&format!(",rep_{i}"));
    }
    out.push_str(",mean\n");
    for s in 0..len {
        out.push_str(&format!("{method},{}", s + 1));
        let mut sum = 0.0;
        for c in curves {
            // a shorter run keeps its final count
            let v = c.get(s).or(c.last()).copied().unwrap_or(0);
            sum += v as f64;
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{:.3}\n", sum / curves.len().max(1) as f64));
    }
    out
}

/// Write `config.json`, `schema.json`, `summary.json`, `stats.json`, `curves.csv`,
/// and per repetition `runlog.jsonl` and `archive.json`.
pub fn write_outputs(result: &CampaignResult, schema_text: &str, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut stored = result.config.clone();
    stored.schema_path = PathBuf::from("schema.json");
    write_file(&out_dir.join("config.json"), &serde_json::to_string_pretty(&stored)?)?;
    write_file(&out_dir.join("schema.json"), schema_text)?;
    let reps = result.repetitions.len();
    for rep in &result.repetitions {
        let dir = repetition_dir(out_dir, rep.index, reps);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let records: Vec<RunRecord> = rep.reported(result.config.accounting).cloned().collect();
        write_file(&dir.join("runlog.jsonl"), &runlog_jsonl(&records)?)?;
        write_file(&dir.join("archive.json"), &rep.archive.to_json()?)?;
    }
    write_file(
        &out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&result.summary)?,
    )?;
    write_file(
        &out_dir.join("stats.json"),
        &serde_json::to_string_pretty(&result.stats())?,
    )?;
    write_file(
        &out_dir.join("curves.csv"),
        &curves_csv(&result.summary.method, &result.curves()),
    )?;
    Ok(())
}

/// Parse a `runlog.jsonl`; a bad line is reported with its 1-based number.
pub fn read_runlog(path: &Path) -> Result<Vec<RunRecord>> {
    let text = read_file(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// A finished run directory loaded back from disk.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
    pub config: CampaignConfig,
    pub schema: Arc<SearchSpaceSchema>,
    pub summary: RunSummary,
}

impl RunDir {
    pub fn open(path: &Path) -> Result<RunDir> {
        let config = CampaignConfig::load(&path.join("config.json"))?;
        let schema = Arc::new(parse_schema(&read_file(&path.join("schema.json"))?)?);
        let summary_path = path.join("summary.json");
        let summary: RunSummary = serde_json::from_str(&read_file(&summary_path)?).map_err(|e| Error::Record {
            path: summary_path,
            line: e.line(),
            reason: e.to_string(),
        })?;
        Ok(RunDir {
            path: path.to_path_buf(),
            config,
            schema,
            summary,
        })
    }

    pub fn runlog(&self, repetition: usize) -> Result<Vec<RunRecord>> {
        if repetition >= self.summary.repetitions {
            return Err(Error::Config(format!(
                "repetition {repetition} out of range (run has {})",
                self.summary.repetitions
            )));
        }
        read_runlog(&repetition_dir(&self.path, repetition, self.summary.repetitions).join("runlog.jsonl"))
    }

    pub fn curves(&self) -> Result<Vec<Vec<usize>>> {
        (0..self.summary.repetitions)
            .map(|i| self.runlog(i).map(|log| unique_curve(&log)))
            .collect()
    }
}

/// Pairwise statistics over two or more run directories.
pub fn compare(dirs: &[RunDir]) -> Result<StatsReport> {
    if dirs.len() < 2 {
        return Err(Error::Config("compare needs at least two run directories".into()));
    }
    Ok(StatsReport::from_methods(
        dirs.iter().map(|d| d.summary.stats.clone()).collect(),
    ))
}

/// Curves of several runs in one CSV, one block per run.
pub fn report(dirs: &[RunDir]) -> Result<String> {
    let mut out = String::new();
    for (i, d) in dirs.iter().enumerate() {
        let csv = curves_csv(&d.summary.method, &d.curves()?);
        if i == 0 {
            out.push_str(&csv);
        } else {
            // later blocks may have a different repetition count; keep only data rows
            out.push_str(&format!("# {}\n", d.path.display()));
            out.extend(csv.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    Ok(out)
}

/// Re-simulate the record with log index `index` of one repetition.
pub fn replay(dir: &RunDir, repetition: usize, index: usize) -> Result<(RunRecord, SimulationOutcome)> {
    let log = dir.runlog(repetition)?;
    let record = log
        .into_iter()
        .find(|r| r.index == index)
        .ok_or_else(|| Error::Config(format!("no record with index {index} in repetition {repetition}")))?;
    let outcome = run_with(&dir.schema, &record.vector, &dir.config.sim, record.sim_seed);
    Ok((record, outcome))
}

pub const SWEEP_TH1: [f64; 3] = [5.0, 10.0, 20.0];
pub const SWEEP_TH2: [f64; 3] = [25.0, 50.0, 75.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub th1: f64,
    pub th2: f64,
    pub unique_violations: f64,
}

/// Count unique violations among logged violation records under each
/// threshold pair, inserting in log order into a fresh archive.
pub fn sweep_replayed(
    schema: &Arc<SearchSpaceSchema>,
    mode: ViolationMode,
    records: &[RunRecord],
    th1: &[f64],
    th2: &[f64],
) -> Vec<SweepCell> {
    let kind = mode.kind();
    let mut cells = Vec::new();
    for &t2 in th2 {
        for &t1 in th1 {
            let mut archive = ViolationArchive::new(Arc::clone(schema), UniquenessParams::new(t1, t2));
            for r in records.iter().filter(|r| r.violation_kind == Some(kind)) {
                archive.insert(ArchiveEntry {
                    vector: r.vector.clone(),
                    kind,
                    objectives: r.objectives,
                    generation: r.generation,
                });
            }
            cells.push(SweepCell {
                th1: t1,
                th2: t2,
                unique_violations: archive.len() as f64,
            });
        }
    }
    cells
}

/// Re-run the whole campaign for each threshold pair; cells hold the mean count.
pub fn sweep_rerun(
    schema: &Arc<SearchSpaceSchema>,
    config: &CampaignConfig,
    th1: &[f64],
    th2: &[f64],
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &t2 in th2 {
        for &t1 in th1 {
            let c = CampaignConfig {
                th1: t1,
                th2: t2,
                ..config.clone()
            };
            let r = run_campaign(Arc::clone(schema), &c)?;
            cells.push(SweepCell {
                th1: t1,
                th2: t2,
                unique_violations: r.summary.stats.mean_unique,
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("th2,th1,unique_violations\n");
    for c in cells {
        out.push_str(&format!("{},{},{}\n", c.th2, c.th1, c.unique_violations));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for name in [
            "RANDOM",
            "GA",
            "GA-UN",
            "GA-UN-NN",
            "GA-UN-NN-GRAD",
            "RANDOM-UN-NN-GRAD",
            "NSGA2-SM",
            "NSGA2-UN-SM-A",
            "NSGA2-DT",
            "AV-FUZZER",
        ] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert_eq!(
            "ga-un-nn-grad(0.5)".parse::<Method>().unwrap(),
            Method::GaGradEpsilon(0.5)
        );
        assert!("GA-UN-NN-GRAD(-1)".parse::<Method>().is_err());
        assert!("SIMULATED-ANNEALING".parse::<Method>().is_err());
    }

    #[test]
    fn bare_config_has_defaults() {
        let c = CampaignConfig::from_json("{}").unwrap();
        assert_eq!(c.seed_collection.budget, 500);
        assert_eq!(c.seed_collection.method, Method::Ga(GaVariant::GaUn));
        assert_eq!((c.th1, c.th2), (10.0, 50.0));
        assert_eq!(c.ga.pop_size, 50);
        assert_eq!(c.accounting, Accounting::ExcludeSeedStage);
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            r#"{"budget": 0}"#,
            r#"{"repetitions": 0}"#,
            r#"{"th1": 150}"#,
            r#"{"method": "NOPE"}"#,
            r#"{"unknown_key": 1}"#,
            r#"{"seed_collection": {"method": "NSGA2-DT"}}"#,
            r#"{"accounting": "include_seed_stage", "budget": 500}"#,
        ] {
            assert!(CampaignConfig::from_json(bad).unwrap_err().is_config(), "{bad}");
        }
    }

    #[test]
    fn curves_csv_pads_short_runs() {
        let csv = curves_csv("X", &[vec![0, 1, 2], vec![1, 1]]);
        assert_eq!(csv.lines().nth(3).unwrap(), "X,3,2,1,1.500");
    }
}
