//! Command-line front end: `fit`, `simulate`, `summarize` and `generate`.
//!
//! Results are reported as one JSON object on stdout. Any failure prints a
//! JSON object `{"error": <kind>, "message": <text>}` on stderr and exits
//! nonzero: 2 for usage errors, 3 when a chain stopped early (its partial
//! artifacts are still written), 1 otherwise.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use spgcop::harness::{archives_in, run_fit, run_simulation, summarize, write_generated};
use spgcop::io::{ChainSection, IoError, RunConfig, ScenarioFile};
use spgcop::mcmc::SamplerKind;

#[derive(Parser)]
#[command(
    name = "spgcop",
    version,
    about = "Spatial Gaussian copula models for mixed outcomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model described by a run file.
    Fit {
        /// Run file (TOML).
        config: PathBuf,
        #[command(flatten)]
        chain: ChainFlags,
        /// Number of independent chains.
        #[arg(long)]
        chains: Option<usize>,
        /// Output directory; overrides `output_dir` in the run file.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Generate, fit and score every replication of a scenario.
    Simulate {
        /// Scenario file (TOML).
        scenario: PathBuf,
        #[command(flatten)]
        chain: ChainFlags,
        /// Number of replications.
        #[arg(long)]
        replications: Option<usize>,
        /// Base seed of the simulated datasets.
        #[arg(long)]
        data_seed: Option<u64>,
        /// Samplers to compare (repeatable); defaults to the scenario's list.
        #[arg(long = "method")]
        methods: Vec<SamplerKind>,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// Pool draw archives into a summary table.
    Summarize {
        /// Draw archives, or fit output directories holding them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Refuse archives whose config digest differs from this one.
        #[arg(long)]
        expect_digest: Option<String>,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
    /// Write simulated datasets and their true correlation matrices.
    Generate {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Number of replications to write, starting from 0.
        #[arg(long)]
        replications: Option<usize>,
        /// Base seed of the simulated datasets.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output_dir: PathBuf,
    },
}

/// Chain settings that override the configuration file.
#[derive(Args)]
struct ChainFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// bgc, spbgc or spbgc_nngp.
    #[arg(long)]
    sampler: Option<SamplerKind>,
    /// Neighbours per site for spbgc_nngp.
    #[arg(short, long)]
    m: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

impl ChainFlags {
    fn apply(&self, section: &mut ChainSection) {
        section.seed = self.seed.or(section.seed);
        section.sampler = self.sampler.or(section.sampler);
        section.m = self.m.or(section.m);
        section.iterations = self.iterations.or(section.iterations);
        section.burn_in = self.burn_in.or(section.burn_in);
        section.thin = self.thin.or(section.thin);
    }
}

enum Failure {
    Usage(String),
    Io(IoError),
    Aborted { report: Value, chains: Vec<String> },
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Failure::Usage(e.to_string())),
    };
    match run(cli.command) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    let (code, body) = match f {
        Failure::Usage(msg) => (2, json!({"error": "usage", "message": msg.trim_end()})),
        Failure::Io(e) => (1, json!({"error": e.kind(), "message": e.to_string()})),
        Failure::Aborted { report, chains } => (
            3,
            json!({"error": "chain_aborted", "message": chains.join("; "), "report": report}),
        ),
    };
    eprintln!("{body}");
    ExitCode::from(code)
}

fn run(command: Command) -> Result<Value, Failure> {
    match command {
        Command::Fit {
            config,
            chain,
            chains,
            output_dir,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            chain.apply(&mut cfg.chain);
            cfg.chain.chains = chains.or(cfg.chain.chains);
            let out = match output_dir {
                Some(dir) => dir,
                None => match &cfg.output_dir {
                    Some(dir) if dir.is_relative() => config.parent().unwrap_or(Path::new(".")).join(dir),
                    Some(dir) => dir.clone(),
                    None => {
                        return Err(Failure::Usage(
                            "no output directory: pass --output-dir or set output_dir".into(),
                        ))
                    }
                },
            };
            let outcome = run_fit(&cfg, &out)?;
            let report = json!({
                "command": "fit",
                "config_digest": outcome.digest,
                "output_dir": out,
                "chains": outcome.chains.iter().map(|c| json!({
                    "seed": c.seed,
                    "draws": c.len(),
                    "iterations_completed": c.iterations_completed,
                    "aborted": c.aborted,
                })).collect::<Vec<_>>(),
            });
            let aborted = outcome.aborted();
            if aborted.is_empty() {
                Ok(report)
            } else {
                Err(Failure::Aborted {
                    report,
                    chains: aborted,
                })
            }
        }
        Command::Simulate {
            scenario,
            chain,
            replications,
            data_seed,
            methods,
            output_dir,
        } => {
            let mut file = ScenarioFile::load(&scenario)?;
            chain.apply(&mut file.chain);
            file.replications = replications.unwrap_or(file.replications);
            file.seed = data_seed.unwrap_or(file.seed);
            if !methods.is_empty() {
                file.methods = methods;
            }
            let outcome = run_simulation(&file, &output_dir)?;
            Ok(json!({
                "command": "simulate",
                "config_digest": outcome.digest,
                "output_dir": output_dir,
                "replications": file.replications,
                "fits": outcome.metrics.len(),
                "failures": outcome.failures.len(),
            }))
        }
        Command::Summarize {
            inputs,
            expect_digest,
            output_dir,
        } => {
            let mut archives = Vec::new();
            for input in &inputs {
                if input.is_dir() {
                    archives.extend(archives_in(input)?);
                } else {
                    archives.push(input.clone());
                }
            }
            let output = output_dir.join("summary.csv");
            let (digest, table) = summarize(&archives, expect_digest.as_deref(), &output)?;
            Ok(json!({
                "command": "summarize",
                "config_digest": digest,
                "archives": archives.len(),
                "draws": table.draws,
                "output": output,
            }))
        }
        Command::Generate {
            scenario,
            replications,
            seed,
            output_dir,
        } => {
            let mut file = ScenarioFile::load(&scenario)?;
            file.seed = seed.unwrap_or(file.seed);
            let reps: Vec<usize> = (0..replications.unwrap_or(file.replications)).collect();
            let written = write_generated(&file, &reps, &output_dir)?;
            Ok(json!({
                "command": "generate",
                "config_digest": file.digest(),
                "files": written,
            }))
        }
    }
}
