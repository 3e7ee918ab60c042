//! Posterior summaries, simulation-study metrics and chain diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky, LinalgError, SpdMatrix};
use crate::mcmc::PosteriorDraws;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("chain of length {len} is too short for lag {max_lag}")]
    ChainTooShort { len: usize, max_lag: usize },
    #[error("chain has zero variance")]
    DegenerateChain,
    #[error("no draws")]
    Empty,
}

/// Upper-triangular pairs `(j, j')`, `j < j'`, in row-major order.
pub fn upper_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|a| ((a + 1)..p).map(move |b| (a, b))).collect()
}

/// `q⁻¹ Σ_{j<j'} (R̂_jj' − R_jj')²`.
pub fn mse(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    assert_eq!(estimate.shape(), truth.shape(), "estimate and truth differ in shape");
    let pairs = upper_pairs(truth.nrows());
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|&(a, b)| (estimate[(a, b)] - truth[(a, b)]).powi(2))
        .sum::<f64>()
        / pairs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Coverage proportion and average length over the upper-triangular pairs;
/// `intervals` follows [`upper_pairs`] order.
pub fn coverage_and_length(intervals: &[Interval], truth: &DMatrix<f64>) -> (f64, f64) {
    let pairs = upper_pairs(truth.nrows());
    assert_eq!(intervals.len(), pairs.len(), "one interval per pair");
    if pairs.is_empty() {
        return (1.0, 0.0);
    }
    let q = pairs.len() as f64;
    let covered = pairs
        .iter()
        .zip(intervals)
        .filter(|(&(a, b), iv)| iv.contains(truth[(a, b)]))
        .count();
    let length: f64 = intervals.iter().map(Interval::length).sum();
    (covered as f64 / q, length / q)
}

/// `−P_jj' / √(P_jj P_j'j')` with `P = R⁻¹`; unit diagonal.
pub fn partial_correlations(r: &SpdMatrix) -> Result<DMatrix<f64>, LinalgError> {
    let prec = cholesky(r)?.inverse().into_inner();
    let p = prec.nrows();
    Ok(DMatrix::from_fn(p, p, |a, b| {
        if a == b {
            1.0
        } else {
            -prec[(a, b)] / (prec[(a, a)] * prec[(b, b)]).sqrt()
        }
    }))
}

/// Type-7 (linear interpolation) quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantiles of an unsorted sample.
pub fn quantiles(values: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&q| quantile_sorted(&sorted, q)).collect()
}

/// Sample autocorrelation at lags `0..=max_lag`.
pub fn acf(chain: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    let n = chain.len();
    if n <= max_lag {
        return Err(DiagnosticsError::ChainTooShort { len: n, max_lag });
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    if !(c0 > 0.0) {
        return Err(DiagnosticsError::DegenerateChain);
    }
    Ok((0..=max_lag)
        .map(|k| {
            centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect())
}

/// Effective sample size with Geyer's initial monotone sequence estimator.
pub fn ess(chain: &[f64]) -> Result<f64, DiagnosticsError> {
    let n = chain.len();
    if n < 4 {
        return Err(DiagnosticsError::ChainTooShort { len: n, max_lag: 3 });
    }
    let rho = acf(chain, n - 1)?;
    // sums of adjacent-lag pairs, truncated at the first non-positive one
    // and forced to be non-increasing
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let mut pair = rho[k] + rho[k + 1];
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        k += 2;
    }
    Ok(n as f64 / tau.max(1.0 / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorQuantiles {
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

impl PosteriorQuantiles {
    pub fn of(values: &[f64]) -> Self {
        let q = quantiles(values, &[0.025, 0.5, 0.975]);
        Self {
            q025: q[0],
            median: q[1],
            q975: q[2],
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lower: self.q025,
            upper: self.q975,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub a: usize,
    pub b: usize,
    pub name_a: String,
    pub name_b: String,
    pub correlation: PosteriorQuantiles,
    pub partial: PosteriorQuantiles,
    /// Effective sample size of the correlation trace; `None` if undefined.
    pub ess: Option<f64>,
}

/// Posterior quantiles of every pairwise correlation and partial correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub p: usize,
    pub draws: usize,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn from_draws(draws: &PosteriorDraws) -> Result<Self, DiagnosticsError> {
        if draws.is_empty() {
            return Err(DiagnosticsError::Empty);
        }
        let p = draws.p;
        let partials: Vec<DMatrix<f64>> = draws
            .r
            .iter()
            // kept draws come out of a successful factorization
            .map(|r| partial_correlations(r).expect("posterior draw of R is SPD"))
            .collect();
        let name = |j: usize| draws.names.get(j).cloned().unwrap_or_else(|| format!("y{}", j + 1));
        let rows = upper_pairs(p)
            .into_iter()
            .map(|(a, b)| {
                let trace = draws.correlation_trace(a, b);
                let ptrace: Vec<f64> = partials.iter().map(|m| m[(a, b)]).collect();
                SummaryRow {
                    a,
                    b,
                    name_a: name(a),
                    name_b: name(b),
                    correlation: PosteriorQuantiles::of(&trace),
                    partial: PosteriorQuantiles::of(&ptrace),
                    ess: ess(&trace).ok(),
                }
            })
            .collect();
        Ok(Self {
            p,
            draws: draws.len(),
            rows,
        })
    }

    /// Posterior medians of `R` as a matrix with unit diagonal.
    pub fn median_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.p, self.p);
        for row in &self.rows {
            m[(row.a, row.b)] = row.correlation.median;
            m[(row.b, row.a)] = row.correlation.median;
        }
        m
    }

    pub fn intervals(&self) -> Vec<Interval> {
        self.rows.iter().map(|r| r.correlation.interval()).collect()
    }
}

/// Metrics of one method on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub scenario: String,
    pub method: String,
    pub replication: usize,
    pub seed: u64,
    pub log_mse: f64,
    pub cp: f64,
    pub al: f64,
    pub seconds: f64,
}

impl ReplicationMetrics {
    pub fn compute(
        summary: &SummaryTable,
        truth: &DMatrix<f64>,
        scenario: &str,
        method: &str,
        replication: usize,
        seed: u64,
        seconds: f64,
    ) -> Self {
        let (cp, al) = coverage_and_length(&summary.intervals(), truth);
        Self {
            scenario: scenario.to_string(),
            method: method.to_string(),
            replication,
            seed,
            log_mse: mse(&summary.median_matrix(), truth).ln(),
            cp,
            al,
            seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, se }
    }
}

/// One scenario × method row of a simulation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub method: String,
    pub replications: usize,
    pub failures: usize,
    pub log_mse: MeanSe,
    pub cp: MeanSe,
    pub al: MeanSe,
    pub seconds: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rows: Vec<MethodSummary>,
}

impl SimulationReport {
    /// Groups by (scenario, method) in order of first appearance. `failures`
    /// lists (scenario, method) of replications that produced no metrics.
    pub fn aggregate(metrics: &[ReplicationMetrics], failures: &[(String, String)]) -> Self {
        let mut keys: Vec<(String, String)> = Vec::new();
        for m in metrics {
            let key = (m.scenario.clone(), m.method.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for f in failures {
            if !keys.contains(f) {
                keys.push(f.clone());
            }
        }
        let rows = keys
            .into_iter()
            .map(|(scenario, method)| {
                let group: Vec<&ReplicationMetrics> = metrics
                    .iter()
                    .filter(|m| m.scenario == scenario && m.method == method)
                    .collect();
                let col =
                    |f: fn(&ReplicationMetrics) -> f64| MeanSe::of(&group.iter().map(|m| f(m)).collect::<Vec<_>>());
                MethodSummary {
                    replications: group.len(),
                    failures: failures.iter().filter(|(s, m)| *s == scenario && *m == method).count(),
                    log_mse: col(|m| m.log_mse),
                    cp: col(|m| m.cp),
                    al: col(|m| m.al),
                    seconds: col(|m| m.seconds),
                    scenario,
                    method,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, scenario: &str, method: &str) -> Option<&MethodSummary> {
        self.rows.iter().find(|r| r.scenario == scenario && r.method == method)
    }
}
