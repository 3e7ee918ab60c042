//! Draw archive layout:
//!
//! ```text
//! # spgcop-draws 1
//! # {"n":50,"p":3,"sampler":"spbgc",...}
//! iteration,phi,r_1_2,r_1_3,r_2_3
//! 1000,0.41,0.52,-0.1,0.07
//! ```
//!
//! The second line is JSON metadata; the rest is CSV with one row per kept
//! draw holding `φ` and the upper triangle of `R`. Wall-clock timings are
//! kept out of the archive so that a fixed seed reproduces it byte for byte.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{fmt_f64, read_to_string, write_string, IoError};
use crate::linalg::SpdMatrix;
use crate::mcmc::{PhaseTimings, PosteriorDraws, SamplerKind};
use crate::metrics::upper_pairs;

const MAGIC: &str = "# spgcop-draws 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub n: usize,
    pub p: usize,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub config_digest: String,
    pub names: Vec<String>,
    pub iterations_completed: usize,
    pub aborted: Option<String>,
    pub phi_acceptance: Option<f64>,
    pub phi_step: Option<f64>,
    pub gibbs_fallbacks: u64,
    pub degenerate_columns: Vec<usize>,
    pub max_site_factor_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawArchive {
    pub meta: ArchiveMeta,
    pub iterations: Vec<usize>,
    pub phi: Vec<f64>,
    /// Upper triangle of each kept `R`, row-major.
    pub r_upper: Vec<Vec<f64>>,
}

impl DrawArchive {
    pub fn from_draws(draws: &PosteriorDraws, config_digest: &str) -> Self {
        let pairs = upper_pairs(draws.p);
        Self {
            meta: ArchiveMeta {
                n: draws.n,
                p: draws.p,
                sampler: draws.sampler,
                seed: draws.seed,
                config_digest: config_digest.to_string(),
                names: draws.names.clone(),
                iterations_completed: draws.iterations_completed,
                aborted: draws.aborted.clone(),
                phi_acceptance: draws.phi_acceptance,
                phi_step: draws.phi_step,
                gibbs_fallbacks: draws.gibbs_fallbacks,
                degenerate_columns: draws.degenerate_columns.clone(),
                max_site_factor_dim: draws.max_site_factor_dim,
            },
            iterations: draws.kept_iterations.clone(),
            phi: draws.phi.clone(),
            r_upper: draws
                .r
                .iter()
                .map(|r| pairs.iter().map(|&(a, b)| r.get(a, b)).collect())
                .collect(),
        }
    }

    pub fn to_draws(&self) -> PosteriorDraws {
        let p = self.meta.p;
        let pairs = upper_pairs(p);
        let r = self
            .r_upper
            .iter()
            .map(|row| {
                let mut m = DMatrix::identity(p, p);
                for (&(a, b), v) in pairs.iter().zip(row) {
                    m[(a, b)] = *v;
                    m[(b, a)] = *v;
                }
                SpdMatrix::from_symmetric(m)
            })
            .collect();
        PosteriorDraws {
            sampler: self.meta.sampler,
            seed: self.meta.seed,
            n: self.meta.n,
            p,
            names: self.meta.names.clone(),
            r,
            phi: self.phi.clone(),
            kept_iterations: self.iterations.clone(),
            iterations_completed: self.meta.iterations_completed,
            aborted: self.meta.aborted.clone(),
            phi_acceptance: self.meta.phi_acceptance,
            phi_step: self.meta.phi_step,
            gibbs_fallbacks: self.meta.gibbs_fallbacks,
            degenerate_columns: self.meta.degenerate_columns.clone(),
            max_site_factor_dim: self.meta.max_site_factor_dim,
            timings: PhaseTimings::default(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str("# ");
        out.push_str(&serde_json::to_string(&self.meta).expect("metadata serializes"));
        out.push('\n');
        let mut header = vec!["iteration".to_string(), "phi".to_string()];
        header.extend(
            upper_pairs(self.meta.p)
                .iter()
                .map(|(a, b)| format!("r_{}_{}", a + 1, b + 1)),
        );
        out.push_str(&header.join(","));
        out.push('\n');
        for (k, row) in self.r_upper.iter().enumerate() {
            let mut fields = vec![self.iterations[k].to_string(), fmt_f64(self.phi[k])];
            fields.extend(row.iter().map(|v| fmt_f64(*v)));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self, IoError> {
        let bad = |m: String| IoError::format(path, m);
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("not a draw archive (missing header line)".into()));
        }
        let meta_line = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| bad("missing metadata line".into()))?;
        let meta: ArchiveMeta = serde_json::from_str(meta_line).map_err(|e| bad(format!("metadata: {e}")))?;
        let width = 2 + meta.p * meta.p.saturating_sub(1) / 2;
        let header = lines.next().ok_or_else(|| bad("missing column header".into()))?;
        if header.split(',').count() != width {
            return Err(bad(format!(
                "expected {width} columns, header has {}",
                header.split(',').count()
            )));
        }
        let mut archive = DrawArchive {
            meta,
            iterations: Vec::new(),
            phi: Vec::new(),
            r_upper: Vec::new(),
        };
        for (k, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(bad(format!(
                    "draw {}: expected {width} fields, got {}",
                    k + 1,
                    fields.len()
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("draw {}: bad number '{s}'", k + 1)))
            };
            archive.iterations.push(
                fields[0]
                    .parse()
                    .map_err(|_| bad(format!("draw {}: bad iteration", k + 1)))?,
            );
            archive.phi.push(num(fields[1])?);
            archive
                .r_upper
                .push(fields[2..].iter().map(|s| num(s)).collect::<Result<_, _>>()?);
        }
        Ok(archive)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_string(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::from_text(&read_to_string(path)?, path)
    }
}
