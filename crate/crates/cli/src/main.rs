use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scenfuzz_core::campaign::{
    compare, replay, report, run_campaign, sweep_csv, sweep_replayed, sweep_rerun, write_outputs, Accounting,
    CampaignConfig, Method, RunDir, SWEEP_TH1, SWEEP_TH2,
};
use scenfuzz_core::grammar::parse_schema;
use scenfuzz_core::{Error, Result};

#[derive(Parser)]
#[command(name = "scenfuzz", version, about = "Grammar-based fuzzing of driving scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write its logs, archive, and statistics.
    Run(RunArgs),
    /// Compare two or more run directories.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        /// Where to write stats.json (printed to stdout otherwise).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-simulate one logged scenario and write its trace.
    Replay {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        repetition: usize,
        /// Log index of the record to replay.
        #[arg(long)]
        index: usize,
        #[arg(long, default_value = "trace.json")]
        out: PathBuf,
        /// Also write the ego path as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Unique-violation counts against simulations for one or more runs, as CSV.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unique-violation counts over the th2 x th1 threshold grid.
    SweepThresholds(SweepArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    th1: Option<f64>,
    #[arg(long)]
    th2: Option<f64>,
    /// `exclude_seed_stage` or `include_seed_stage`.
    #[arg(long)]
    accounting: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Replay the violations logged in this run directory.
    #[arg(long, conflicts_with = "rerun")]
    run_dir: Option<PathBuf>,
    /// Re-run the configured campaign for every threshold pair instead.
    #[arg(long, requires = "config")]
    rerun: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "sweep")]
    out_dir: PathBuf,
}

impl Overrides {
    fn load(&self) -> Result<CampaignConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut c = CampaignConfig::load(path)?;
        if let Some(m) = &self.method {
            c.method = m.parse::<Method>()?;
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        if let Some(s) = self.seed {
            c.rng_seed = s;
        }
        if let Some(t) = self.th1 {
            c.th1 = t;
        }
        if let Some(t) = self.th2 {
            c.th2 = t;
        }
        if let Some(a) = &self.accounting {
            c.accounting = a.parse::<Accounting>()?;
        }
        if let Some(r) = self.repetitions {
            c.repetitions = r;
        }
        c.validate()?;
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_schema(config: &CampaignConfig) -> Result<(String, Arc<scenfuzz_core::grammar::SearchSpaceSchema>)> {
    let text = read(&config.schema_path)?;
    let schema = parse_schema(&text)?;
    Ok((text, Arc::new(schema)))
}

fn open_runs(paths: &[PathBuf]) -> Result<Vec<RunDir>> {
    paths.iter().map(|p| RunDir::open(p)).collect()
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.overrides.load()?;
            let (text, schema) = load_schema(&config)?;
            let result = run_campaign(schema, &config)?;
            write_outputs(&result, &text, &args.out_dir)?;
            let s = &result.summary;
            println!(
                "{}: unique violations {:?} (mean {:.2}, {:.1}% unique), {:.0} sims/s, output in {}",
                s.method,
                s.stats.unique_violations,
                s.stats.mean_unique,
                s.stats.unique_percentage,
                s.simulations_per_sec,
                args.out_dir.display()
            );
        }
        Command::Compare { runs, out_dir } => {
            let stats = compare(&open_runs(&runs)?)?;
            let json = serde_json::to_string_pretty(&stats)?;
            match out_dir {
                Some(dir) => write(&dir.join("stats.json"), &json)?,
                None => println!("{json}"),
            }
            for p in &stats.pairs {
                eprintln!(
                    "{} vs {}: p = {:.4}, A12 = {:.3} [{:.3}, {:.3}]",
                    p.a, p.b, p.p_value, p.a12, p.a12_ci_low, p.a12_ci_high
                );
            }
        }
        Command::Replay {
            run_dir,
            repetition,
            index,
            out,
            csv,
        } => {
            let dir = RunDir::open(&run_dir)?;
            let (record, outcome) = replay(&dir, repetition, index)?;
            write(&out, &outcome.trace_json()?)?;
            if let Some(csv) = csv {
                write(&csv, &outcome.ego_path_csv())?;
            }
            let replayed = outcome.violation.as_ref().map(Into::into);
            if replayed != record.violation_kind {
                log::warn!(
                    "replayed violation {:?} differs from logged {:?}",
                    replayed,
                    record.violation_kind
                );
            }
            println!(
                "replayed record {index}: {:?} after {} steps",
                outcome.termination, outcome.steps
            );
        }
        Command::Report { runs, out } => {
            let csv = report(&open_runs(&runs)?)?;
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::SweepThresholds(args) => {
            let cells = if args.rerun {
                let config = args.overrides.load()?;
                let (_, schema) = load_schema(&config)?;
                sweep_rerun(&schema, &config, &SWEEP_TH1, &SWEEP_TH2)?
            } else {
                let path = args
                    .run_dir
                    .ok_or_else(|| Error::Config("either --run-dir or --rerun is required".into()))?;
                let dir = RunDir::open(&path)?;
                let mut records = Vec::new();
                for rep in 0..dir.summary.repetitions {
                    let log = dir.runlog(rep)?;
                    records.push(sweep_replayed(
                        &dir.schema,
                        dir.config.violation_mode,
                        &log,
                        &SWEEP_TH1,
                        &SWEEP_TH2,
                    ));
                }
                // mean over repetitions, cell by cell
                let n = records.len() as f64;
                let mut cells = records[0].clone();
                for (i, c) in cells.iter_mut().enumerate() {
                    c.unique_violations = records.iter().map(|r| r[i].unique_violations).sum::<f64>() / n;
                }
                cells
            };
            write(&args.out_dir.join("sweep.json"), &serde_json::to_string_pretty(&cells)?)?;
            let csv = sweep_csv(&cells);
            write(&args.out_dir.join("sweep.csv"), &csv)?;
            print!("{csv}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
