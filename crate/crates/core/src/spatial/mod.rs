//! Locations, isotropic correlation functions and the spatial correlation
//! matrix `H(φ)`.

mod kdtree;
mod nngp;

pub use kdtree::KdTree;
pub use nngp::{build_neighbor_graph, nngp_joint_logpdf, NeighborGraph, NeighborSets};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SpdMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("location {0} has a non-finite coordinate")]
    NonFiniteCoordinate(usize),
    #[error("ordering is not a permutation of 0..{0}")]
    InvalidOrdering(usize),
    #[error("spatial range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("neighbor budget m = {m} is outside 1..={max}")]
    InvalidNeighborBudget { m: usize, max: usize },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Order in which sites are conditioned on their predecessors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKind {
    /// Sites in input order.
    #[default]
    Input,
    /// Greedy max-min distance ordering.
    MaxMin,
}

/// Site coordinates plus the sequential-conditioning order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    coords: Vec<[f64; 2]>,
    ordering: Vec<usize>,
}

impl LocationSet {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self, SpatialError> {
        if let Some(i) = coords.iter().position(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(SpatialError::NonFiniteCoordinate(i));
        }
        let ordering = (0..coords.len()).collect();
        Ok(Self { coords, ordering })
    }

    pub fn with_ordering(mut self, ordering: Vec<usize>) -> Result<Self, SpatialError> {
        let n = self.coords.len();
        let mut seen = vec![false; n];
        if ordering.len() != n {
            return Err(SpatialError::InvalidOrdering(n));
        }
        for &i in &ordering {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(SpatialError::InvalidOrdering(n));
            }
        }
        self.ordering = ordering;
        Ok(self)
    }

    pub fn with_ordering_kind(self, kind: OrderingKind) -> Self {
        match kind {
            OrderingKind::Input => {
                let n = self.len();
                Self {
                    ordering: (0..n).collect(),
                    ..self
                }
            }
            OrderingKind::MaxMin => {
                let ordering = maxmin_ordering(&self.coords);
                Self { ordering, ..self }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// `ordering()[k]` is the site conditioned k-th.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclidean(&self.coords[a], &self.coords[b])
    }

    /// Largest pairwise distance.
    pub fn max_distance(&self) -> f64 {
        let mut best = 0.0f64;
        for a in 0..self.len() {
            for b in (a + 1)..self.len() {
                best = best.max(self.distance(a, b));
            }
        }
        best
    }
}

pub(crate) fn euclidean(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub(crate) fn squared_distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Starts from the site nearest the centroid, then repeatedly takes the site
/// farthest from everything chosen so far. Ties go to the lower index.
fn maxmin_ordering(coords: &[[f64; 2]]) -> Vec<usize> {
    let n = coords.len();
    if n == 0 {
        return Vec::new();
    }
    let centroid = coords.iter().fold([0.0, 0.0], |acc, c| {
        [acc[0] + c[0] / n as f64, acc[1] + c[1] / n as f64]
    });
    let first = (0..n)
        .min_by(|&a, &b| squared_distance(&coords[a], &centroid).total_cmp(&squared_distance(&coords[b], &centroid)))
        .unwrap();
    let mut order = vec![first];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut nearest: Vec<f64> = coords.iter().map(|c| squared_distance(c, &coords[first])).collect();
    while order.len() < n {
        let mut next = usize::MAX;
        let mut far = f64::NEG_INFINITY;
        for i in 0..n {
            if !chosen[i] && nearest[i] > far {
                far = nearest[i];
                next = i;
            }
        }
        chosen[next] = true;
        order.push(next);
        for i in 0..n {
            nearest[i] = nearest[i].min(squared_distance(&coords[i], &coords[next]));
        }
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    /// `exp(-d/φ)`
    #[default]
    Exponential,
    /// `exp(-(d/φ)²)`
    Gaussian,
}

/// Isotropic correlation function `ρ(d; φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFunction {
    kind: CorrelationKind,
    range: f64,
}

impl CorrelationFunction {
    pub fn new(kind: CorrelationKind, range: f64) -> Result<Self, SpatialError> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(SpatialError::InvalidRange(range));
        }
        Ok(Self { kind, range })
    }

    pub fn exponential(range: f64) -> Result<Self, SpatialError> {
        Self::new(CorrelationKind::Exponential, range)
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn with_range(&self, range: f64) -> Result<Self, SpatialError> {
        Self::new(self.kind, range)
    }

    pub fn eval(&self, d: f64) -> f64 {
        let t = d / self.range;
        match self.kind {
            CorrelationKind::Exponential => (-t).exp(),
            CorrelationKind::Gaussian => (-t * t).exp(),
        }
    }

    pub(crate) fn between(&self, locs: &LocationSet, a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            self.eval(locs.distance(a, b))
        }
    }
}

/// `H_{ii'} = ρ(‖s_i − s_i'‖; φ)` with unit diagonal.
pub fn build_h(locs: &LocationSet, corr: &CorrelationFunction) -> SpdMatrix {
    let n = locs.len();
    let mut h = DMatrix::identity(n, n);
    for c in 0..n {
        for r in (c + 1)..n {
            let v = corr.eval(locs.distance(r, c));
            h[(r, c)] = v;
            h[(c, r)] = v;
        }
    }
    SpdMatrix::from_symmetric(h)
}
