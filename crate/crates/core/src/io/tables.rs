//! Delimited output tables. Every file opens with a `# config_digest=` line
//! naming the configuration that produced it.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt_f64, IoError};
use crate::mcmc::{PhaseTimings, PosteriorDraws};
use crate::metrics::{
    acf, upper_pairs, PosteriorQuantiles, ReplicationMetrics, SimulationReport, SummaryRow, SummaryTable,
};

pub const DIGEST_PREFIX: &str = "# config_digest=";

fn create(path: &Path, digest: &str, extra: &[String]) -> Result<csv::Writer<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| IoError::file(path, e))?;
    writeln!(f, "{DIGEST_PREFIX}{digest}").map_err(|e| IoError::file(path, e))?;
    for line in extra {
        writeln!(f, "# {line}").map_err(|e| IoError::file(path, e))?;
    }
    Ok(csv::Writer::from_writer(f))
}

fn reader(path: &Path) -> Result<csv::Reader<File>, IoError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| IoError::format(path, e.to_string()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |e| IoError::format(path, e.to_string())
}

/// Digest recorded on the first line of an output table.
pub fn read_digest(path: &Path) -> Result<String, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut first = String::new();
    BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| IoError::file(path, e))?;
    first
        .trim_end()
        .strip_prefix(DIGEST_PREFIX)
        .map(str::to_string)
        .ok_or_else(|| IoError::format(path, "missing config digest line"))
}

/// Comment lines `# key=value` after the digest line.
fn read_comment(path: &Path, key: &str) -> Result<Option<String>, IoError> {
    let f = File::open(path).map_err(|e| IoError::file(path, e))?;
    let prefix = format!("# {key}=");
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| IoError::file(path, e))?;
        if !line.starts_with('#') {
            break;
        }
        if let Some(v) = line.strip_prefix(&prefix) {
            return Ok(Some(v.to_string()));
        }
    }
    Ok(None)
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRecord {
    a: usize,
    b: usize,
    name_a: String,
    name_b: String,
    corr_q025: f64,
    corr_median: f64,
    corr_q975: f64,
    pcor_q025: f64,
    pcor_median: f64,
    pcor_q975: f64,
    ess: Option<f64>,
}

/// Posterior quantiles of correlations and partial correlations, one row per
/// pair (1-based column indices).
pub fn write_summary(path: &Path, table: &SummaryTable, digest: &str) -> Result<(), IoError> {
    let mut w = create(
        path,
        digest,
        &[format!("p={}", table.p), format!("draws={}", table.draws)],
    )?;
    for r in &table.rows {
        w.serialize(SummaryRecord {
            a: r.a + 1,
            b: r.b + 1,
            name_a: r.name_a.clone(),
            name_b: r.name_b.clone(),
            corr_q025: r.correlation.q025,
            corr_median: r.correlation.median,
            corr_q975: r.correlation.q975,
            pcor_q025: r.partial.q025,
            pcor_median: r.partial.median,
            pcor_q975: r.partial.q975,
            ess: r.ess,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}

pub fn read_summary(path: &Path) -> Result<(String, SummaryTable), IoError> {
    let digest = read_digest(path)?;
    let number = |key: &str| -> Result<usize, IoError> {
        read_comment(path, key)?
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| IoError::format(path, format!("missing '{key}' line")))
    };
    let (p, draws) = (number("p")?, number("draws")?);
    let mut rows = Vec::new();
    for rec in reader(path)?.deserialize::<SummaryRecord>() {
        let r = rec.map_err(csv_err(path))?;
        if r.a == 0 || r.b == 0 {
            return Err(IoError::format(path, "column indices are 1-based"));
        }
        rows.push(SummaryRow {
            a: r.a - 1,
            b: r.b - 1,
            name_a: r.name_a,
            name_b: r.name_b,
            correlation: PosteriorQuantiles {
                q025: r.corr_q025,
                median: r.corr_median,
                q975: r.corr_q975,
            },
            partial: PosteriorQuantiles {
                q025: r.pcor_q025,
                median: r.pcor_median,
                q975: r.pcor_q975,
            },
            ess: r.ess,
        });
    }
    Ok((digest, SummaryTable { p, draws, rows }))
}

/// Autocorrelation of every correlation trace at lags `0..=max_lag`
/// (shortened to the chain length). Constant traces are written as `NaN`.
pub fn write_acf(path: &Path, draws: &PosteriorDraws, max_lag: usize, digest: &str) -> Result<(), IoError> {
    let max_lag = max_lag.min(draws.len().saturating_sub(1));
    let pairs = upper_pairs(draws.p);
    let columns: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(a, b)| acf(&draws.correlation_trace(a, b), max_lag).unwrap_or_else(|_| vec![f64::NAN; max_lag + 1]))
        .collect();
    let mut w = create(path, digest, &[])?;
    let mut header = vec!["lag".to_string()];
    header.extend(pairs.iter().map(|(a, b)| format!("r_{}_{}", a + 1, b + 1)));
    w.write_record(&header).map_err(csv_err(path))?;
    if !draws.is_empty() {
        for lag in 0..=max_lag {
            let mut rec = vec![lag.to_string()];
            rec.extend(columns.iter().map(|c| fmt_f64(c[lag])));
            w.write_record(&rec).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| IoError::file(path, e))
}

/// Wall-clock seconds per phase for each labelled run.
pub fn write_timings(path: &Path, rows: &[(String, PhaseTimings)], digest: &str) -> Result<(), IoError> {
    let mut w = create(path, digest, &[])?;
    w.write_record(["run", "z_seconds", "r_seconds", "phi_seconds", "total_seconds"])
        .map_err(csv_err(path))?;
    for (label, t) in rows {
        w.write_record([
            label.clone(),
            fmt_f64(t.z),
            fmt_f64(t.r),
            fmt_f64(t.phi),
            fmt_f64(t.total),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}

/// One row per (scenario, method, replication).
pub fn write_replications(path: &Path, rows: &[ReplicationMetrics], digest: &str) -> Result<(), IoError> {
    let mut w = create(path, digest, &[])?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}

pub fn read_replications(path: &Path) -> Result<(String, Vec<ReplicationMetrics>), IoError> {
    let digest = read_digest(path)?;
    let rows = reader(path)?
        .deserialize()
        .collect::<Result<Vec<ReplicationMetrics>, _>>()
        .map_err(csv_err(path))?;
    Ok((digest, rows))
}

/// Aggregated report: means and standard errors per scenario and method.
pub fn write_report(path: &Path, report: &SimulationReport, digest: &str) -> Result<(), IoError> {
    let mut w = create(path, digest, &[])?;
    w.write_record([
        "scenario",
        "method",
        "replications",
        "failures",
        "log_mse_mean",
        "log_mse_se",
        "cp_mean",
        "cp_se",
        "al_mean",
        "al_se",
        "seconds_mean",
        "seconds_se",
    ])
    .map_err(csv_err(path))?;
    for r in &report.rows {
        let mut rec = vec![
            r.scenario.clone(),
            r.method.clone(),
            r.replications.to_string(),
            r.failures.to_string(),
        ];
        for m in [r.log_mse, r.cp, r.al, r.seconds] {
            rec.push(fmt_f64(m.mean));
            rec.push(fmt_f64(m.se));
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}
