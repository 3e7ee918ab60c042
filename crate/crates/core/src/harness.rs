//! End-to-end runs: fitting a configured dataset, pooling archived chains,
//! generating scenario datasets and running simulation studies.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::io::{
    load_csv, write_acf, write_csv, write_replications, write_report, write_string, write_summary, write_timings,
    DrawArchive, IoError, RunConfig, ScenarioFile,
};
use crate::linalg::SpdMatrix;
use crate::mcmc::{run_chain, ChainConfig, PosteriorDraws, SamplerKind};
use crate::metrics::{ReplicationMetrics, SimulationReport, SummaryTable};
use crate::rank::MixedOutcomeMatrix;
use crate::samplers::seeded_rng;
use crate::spatial::LocationSet;
use crate::synthetic::{generate, SyntheticDataset};

/// Lags written to the autocorrelation tables.
pub const ACF_MAX_LAG: usize = 50;

/// Result of [`run_fit`]; the artifacts are already on disk.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub digest: String,
    pub output_dir: PathBuf,
    pub chains: Vec<PosteriorDraws>,
    pub summary: Option<SummaryTable>,
}

impl FitOutcome {
    /// Messages of chains that stopped early.
    pub fn aborted(&self) -> Vec<String> {
        self.chains
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.aborted.as_ref().map(|m| format!("chain {k}: {m}")))
            .collect()
    }
}

#[derive(Serialize)]
struct ChainManifest<'a> {
    chain: usize,
    seed: u64,
    draws: usize,
    iterations_completed: usize,
    aborted: &'a Option<String>,
    phi_acceptance: Option<f64>,
    gibbs_fallbacks: u64,
    degenerate_columns: &'a [usize],
    seconds: f64,
}

#[derive(Serialize)]
struct FitManifest<'a> {
    config_digest: &'a str,
    config: &'a RunConfig,
    n: usize,
    p: usize,
    chains: Vec<ChainManifest<'a>>,
}

/// Data of a run: read from CSV, or generated from a scenario file.
pub fn load_run_data(cfg: &RunConfig) -> Result<(MixedOutcomeMatrix, Option<LocationSet>), IoError> {
    cfg.validate()?;
    if let Some(path) = &cfg.input.csv {
        let data = load_csv(path, &cfg.input.columns, &cfg.input.location_columns)?;
        return Ok((data.y, data.locations));
    }
    let path = cfg.input.scenario.as_ref().expect("validated input");
    let file = ScenarioFile::load(path)?;
    let d = generate_replication(&file, cfg.input.replication)?;
    Ok((d.y, Some(d.locations)))
}

/// Runs every configured chain (seeds `seed, seed + 1, …`) and writes draw
/// archives, autocorrelation tables, the pooled summary, timings and a JSON
/// manifest into `output_dir`. Chains that stop early keep their partial
/// draws and are flagged in the manifest.
pub fn run_fit(cfg: &RunConfig, output_dir: &Path) -> Result<FitOutcome, IoError> {
    let (y, locs) = load_run_data(cfg)?;
    let digest = cfg.digest();
    let prior = cfg.prior.resolve(y.p(), locs.as_ref());
    let base = cfg.chain_config();
    let configs: Vec<ChainConfig> = (0..cfg.chains())
        .map(|k| ChainConfig {
            seed: base.seed.wrapping_add(k as u64),
            ..base.clone()
        })
        .collect();
    let chains = configs
        .par_iter()
        .map(|c| run_chain(&y, locs.as_ref(), &prior, c))
        .collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(output_dir).map_err(|e| IoError::file(output_dir, e))?;
    for (k, chain) in chains.iter().enumerate() {
        DrawArchive::from_draws(chain, &digest).write(&output_dir.join(format!("draws_chain{k}.csv")))?;
        write_acf(
            &output_dir.join(format!("acf_chain{k}.csv")),
            chain,
            ACF_MAX_LAG,
            &digest,
        )?;
    }
    let pooled = pool(&chains);
    let summary = SummaryTable::from_draws(&pooled).ok();
    if let Some(s) = &summary {
        write_summary(&output_dir.join("summary.csv"), s, &digest)?;
    }
    let timing_rows: Vec<(String, _)> = chains
        .iter()
        .enumerate()
        .map(|(k, c)| (format!("chain{k}_{}", c.sampler), c.timings))
        .collect();
    write_timings(&output_dir.join("timings.csv"), &timing_rows, &digest)?;
    let manifest = FitManifest {
        config_digest: &digest,
        config: cfg,
        n: y.n(),
        p: y.p(),
        chains: chains
            .iter()
            .enumerate()
            .map(|(k, c)| ChainManifest {
                chain: k,
                seed: c.seed,
                draws: c.len(),
                iterations_completed: c.iterations_completed,
                aborted: &c.aborted,
                phi_acceptance: c.phi_acceptance,
                gibbs_fallbacks: c.gibbs_fallbacks,
                degenerate_columns: &c.degenerate_columns,
                seconds: c.timings.total,
            })
            .collect(),
    };
    write_string(
        &output_dir.join("run.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(FitOutcome {
        digest,
        output_dir: output_dir.to_path_buf(),
        chains,
        summary,
    })
}

/// Concatenates the draws of several chains of the same model.
pub fn pool(chains: &[PosteriorDraws]) -> PosteriorDraws {
    let mut out = chains[0].clone();
    for c in &chains[1..] {
        out.r.extend(c.r.iter().cloned());
        out.phi.extend_from_slice(&c.phi);
        out.kept_iterations.extend_from_slice(&c.kept_iterations);
    }
    out
}

/// Reads draw archives, refuses to mix configuration digests (against each
/// other, and against `expected` if given), and writes the pooled summary
/// to `output`. Returns the shared digest and the summary.
pub fn summarize(
    archives: &[PathBuf],
    expected: Option<&str>,
    output: &Path,
) -> Result<(String, SummaryTable), IoError> {
    if archives.is_empty() {
        return Err(IoError::Config("no draw archives to summarize".into()));
    }
    let mut chains = Vec::with_capacity(archives.len());
    let mut digest: Option<String> = expected.map(str::to_string);
    for path in archives {
        let a = DrawArchive::read(path)?;
        match &digest {
            Some(d) if *d != a.meta.config_digest => {
                return Err(IoError::DigestMismatch {
                    path: path.clone(),
                    expected: d.clone(),
                    found: a.meta.config_digest.clone(),
                })
            }
            Some(_) => {}
            None => digest = Some(a.meta.config_digest.clone()),
        }
        chains.push(a.to_draws());
    }
    let digest = digest.expect("at least one archive");
    let (p, sampler) = (chains[0].p, chains[0].sampler);
    if let Some((k, _)) = chains
        .iter()
        .enumerate()
        .find(|(_, c)| c.p != p || c.sampler != sampler)
    {
        return Err(IoError::format(&archives[k], "archive differs in dimension or sampler"));
    }
    let table = SummaryTable::from_draws(&pool(&chains))?;
    write_summary(output, &table, &digest)?;
    Ok((digest, table))
}

/// Draw archives `draws_chain*.csv` in a fit's output directory, sorted.
pub fn archives_in(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| IoError::file(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("draws_chain") && n.ends_with(".csv"))
        })
        .collect();
    found.sort();
    Ok(found)
}

/// Dataset of replication `rep`, generated from seed `seed + rep`.
pub fn generate_replication(file: &ScenarioFile, rep: usize) -> Result<SyntheticDataset, IoError> {
    let spec = file.spec()?;
    Ok(generate(&spec, &mut seeded_rng(spec.replication_seed(rep)))?)
}

/// Writes `data_rep{r}.csv` (outcomes plus `x`, `y`) and `truth_rep{r}.csv`
/// (the true correlation matrix) for each requested replication.
pub fn write_generated(file: &ScenarioFile, reps: &[usize], output_dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut written = Vec::new();
    for &rep in reps {
        let d = generate_replication(file, rep)?;
        let data = output_dir.join(format!("data_rep{rep}.csv"));
        write_csv(&data, &d.y, Some(&d.locations))?;
        let truth = output_dir.join(format!("truth_rep{rep}.csv"));
        write_string(&truth, &matrix_csv(&d.true_r, d.y.names()))?;
        written.push(data);
        written.push(truth);
    }
    Ok(written)
}

fn matrix_csv(m: &SpdMatrix, names: &[String]) -> String {
    let mut out = format!("name,{}\n", names.join(","));
    for (a, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..m.dim()).map(|b| format!("{:?}", m.get(a, b))).collect();
        out.push_str(&format!("{name},{}\n", row.join(",")));
    }
    out
}

/// One (replication, method) that produced no metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationFailure {
    pub scenario: String,
    pub method: String,
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub digest: String,
    pub metrics: Vec<ReplicationMetrics>,
    pub failures: Vec<ReplicationFailure>,
    pub report: SimulationReport,
}

/// Seed of the chain fitted with method number `method` to a replication
/// whose data came from `data_seed`; kept apart from the data stream.
pub fn chain_seed(data_seed: u64, method: usize) -> u64 {
    data_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03_u64.wrapping_mul(method as u64 + 1))
}

/// Generate, fit every method, and score each replication. Replications run
/// in parallel; a failed or aborted chain is recorded and left out of the
/// aggregate.
pub fn simulate(file: &ScenarioFile) -> Result<SimulationOutcome, IoError> {
    let spec = file.spec()?;
    let base = file.chain_config();
    base.validate()?;
    let results: Vec<Vec<Result<ReplicationMetrics, ReplicationFailure>>> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = spec.replication_seed(rep);
            let fail = |method: &str, message: String| ReplicationFailure {
                scenario: spec.name.clone(),
                method: method.to_string(),
                replication: rep,
                message,
            };
            let data = match generate(&spec, &mut seeded_rng(seed)) {
                Ok(d) => d,
                Err(e) => {
                    return file
                        .methods
                        .iter()
                        .map(|m| Err(fail(m.as_str(), e.to_string())))
                        .collect()
                }
            };
            let prior = file.prior.resolve(spec.p(), Some(&data.locations));
            file.methods
                .iter()
                .enumerate()
                .map(|(k, &method)| {
                    fit_one(&data, &prior, &base, method, chain_seed(seed, k), rep, &spec.name, seed)
                        .map_err(|msg| fail(method.as_str(), msg))
                })
                .collect()
        })
        .collect();
    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(m) => metrics.push(m),
            Err(f) => failures.push(f),
        }
    }
    let failure_keys: Vec<(String, String)> = failures
        .iter()
        .map(|f| (f.scenario.clone(), f.method.clone()))
        .collect();
    let report = SimulationReport::aggregate(&metrics, &failure_keys);
    Ok(SimulationOutcome {
        digest: file.digest(),
        metrics,
        failures,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_one(
    data: &SyntheticDataset,
    prior: &crate::mcmc::PriorConfig,
    base: &ChainConfig,
    method: SamplerKind,
    seed: u64,
    rep: usize,
    scenario: &str,
    data_seed: u64,
) -> Result<ReplicationMetrics, String> {
    let cfg = ChainConfig {
        sampler: method,
        seed,
        ..base.clone()
    };
    let draws = run_chain(&data.y, Some(&data.locations), prior, &cfg).map_err(|e| e.to_string())?;
    if let Some(msg) = &draws.aborted {
        return Err(msg.clone());
    }
    let table = SummaryTable::from_draws(&draws).map_err(|e| e.to_string())?;
    Ok(ReplicationMetrics::compute(
        &table,
        data.true_r.as_matrix(),
        scenario,
        method.as_str(),
        rep,
        data_seed,
        draws.timings.total,
    ))
}

/// [`simulate`], then writes `replications.csv`, `report.csv`,
/// `failures.json` and the resolved `scenario.toml` into `output_dir`.
pub fn run_simulation(file: &ScenarioFile, output_dir: &Path) -> Result<SimulationOutcome, IoError> {
    let outcome = simulate(file)?;
    write_replications(&output_dir.join("replications.csv"), &outcome.metrics, &outcome.digest)?;
    write_report(&output_dir.join("report.csv"), &outcome.report, &outcome.digest)?;
    write_string(
        &output_dir.join("failures.json"),
        &serde_json::to_string_pretty(&outcome.failures).expect("failures serialize"),
    )?;
    write_string(&output_dir.join("scenario.toml"), &file.to_toml_string())?;
    Ok(outcome)
}
