//! Nearest-neighbor Gaussian process: predecessor neighbor sets `N_i`,
//! their inverse relation `D_i`, and the Vecchia factors `B_i`, `F_i`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{squared_distance, CorrelationFunction, KdTree, LocationSet, SpatialError};
use crate::linalg::{cholesky, mvn_logpdf_factored, LinalgError, SpdMatrix};

const BRUTE_FORCE_BELOW: usize = 200;

/// Neighbor structure; depends on the locations, ordering and `m` only.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    m: usize,
    neighbors: Vec<Vec<usize>>,
    conditioning: Vec<Vec<usize>>,
}

impl NeighborSets {
    pub fn build(locs: &LocationSet, m: usize) -> Result<Self, SpatialError> {
        let n = locs.len();
        if m == 0 || (n > 1 && m > n - 1) {
            return Err(SpatialError::InvalidNeighborBudget {
                m,
                max: n.saturating_sub(1).max(1),
            });
        }
        let mut rank = vec![0usize; n];
        for (pos, &i) in locs.ordering().iter().enumerate() {
            rank[i] = pos;
        }
        let neighbors: Vec<Vec<usize>> = if n < BRUTE_FORCE_BELOW {
            (0..n).map(|i| brute_force_predecessors(locs, &rank, i, m)).collect()
        } else {
            let tree = KdTree::new(locs.coords(), &rank);
            (0..n)
                .map(|i| tree.nearest_before(locs.coords()[i], m, rank[i]))
                .collect()
        };
        let mut conditioning: Vec<Vec<usize>> = neighbors.clone();
        for (i, ni) in neighbors.iter().enumerate() {
            for &k in ni {
                conditioning[k].push(i);
            }
        }
        for d in conditioning.iter_mut() {
            d.sort_unstable();
            d.dedup();
        }
        Ok(Self {
            m,
            neighbors,
            conditioning,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// `N_i`: up to `m` nearest predecessors, nearest first.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `D_i = N_i ∪ {i' : i ∈ N_i'}`, ascending.
    pub fn conditioning_set(&self, i: usize) -> &[usize] {
        &self.conditioning[i]
    }

    pub fn max_conditioning_size(&self) -> usize {
        self.conditioning.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn brute_force_predecessors(locs: &LocationSet, rank: &[usize], i: usize, m: usize) -> Vec<usize> {
    let target = locs.coords()[i];
    let mut cands: Vec<(f64, usize, usize)> = (0..locs.len())
        .filter(|&k| rank[k] < rank[i])
        .map(|k| (squared_distance(&locs.coords()[k], &target), rank[k], k))
        .collect();
    cands.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    cands.truncate(m);
    cands.into_iter().map(|c| c.2).collect()
}

/// Neighbor sets together with the factors for one correlation function.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    sets: Arc<NeighborSets>,
    corr: CorrelationFunction,
    b: Vec<Vec<f64>>,
    f: Vec<f64>,
}

/// Builds `N_i`, `D_i` and the factors
/// `B_i = H_{i,N_i} H_{N_i}⁻¹`, `F_i = 1 − H_{i,N_i} H_{N_i}⁻¹ H_{N_i,i}`.
pub fn build_neighbor_graph(
    locs: &LocationSet,
    m: usize,
    corr: &CorrelationFunction,
) -> Result<NeighborGraph, SpatialError> {
    let sets = Arc::new(NeighborSets::build(locs, m)?);
    NeighborGraph::from_sets(sets, locs, corr)
}

impl NeighborGraph {
    pub fn from_sets(
        sets: Arc<NeighborSets>,
        locs: &LocationSet,
        corr: &CorrelationFunction,
    ) -> Result<Self, SpatialError> {
        let n = sets.len();
        let mut b = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        for i in 0..n {
            let (bi, fi) = vecchia_factor(locs, corr, i, sets.neighbors(i))?;
            b.push(bi);
            f.push(fi);
        }
        Ok(Self {
            sets,
            corr: *corr,
            b,
            f,
        })
    }

    /// Same neighbor sets, factors recomputed for `corr`.
    pub fn refactor(&self, locs: &LocationSet, corr: &CorrelationFunction) -> Result<Self, SpatialError> {
        Self::from_sets(Arc::clone(&self.sets), locs, corr)
    }

    pub fn sets(&self) -> &NeighborSets {
        &self.sets
    }

    pub fn shared_sets(&self) -> Arc<NeighborSets> {
        Arc::clone(&self.sets)
    }

    pub fn correlation(&self) -> &CorrelationFunction {
        &self.corr
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.sets.neighbors(i)
    }

    pub fn conditioning_set(&self, i: usize) -> &[usize] {
        self.sets.conditioning_set(i)
    }

    pub fn b(&self, i: usize) -> &[f64] {
        &self.b[i]
    }

    pub fn f(&self, i: usize) -> f64 {
        self.f[i]
    }

    /// `Σ log F_i`, the log-determinant of the implied correlation matrix.
    pub fn log_det(&self) -> f64 {
        self.f.iter().map(|f| f.ln()).sum()
    }

    /// Rows `z_i − B_i z_{N_i}`.
    pub fn residuals(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, p) = z.shape();
        let mut out = z.clone();
        for i in 0..n {
            for (&k, &w) in self.neighbors(i).iter().zip(&self.b[i]) {
                for j in 0..p {
                    out[(i, j)] -= w * z[(k, j)];
                }
            }
        }
        out
    }

    /// Rows `(z_i − B_i z_{N_i}) / sqrt(F_i)`.
    pub fn whitened_residuals(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.residuals(z);
        for (i, &f) in self.f.iter().enumerate() {
            let s = f.sqrt();
            for j in 0..out.ncols() {
                out[(i, j)] /= s;
            }
        }
        out
    }
}

fn vecchia_factor(
    locs: &LocationSet,
    corr: &CorrelationFunction,
    i: usize,
    ni: &[usize],
) -> Result<(Vec<f64>, f64), SpatialError> {
    if ni.is_empty() {
        return Ok((Vec::new(), 1.0));
    }
    let k = ni.len();
    let block = DMatrix::from_fn(k, k, |r, c| corr.between(locs, ni[r], ni[c]));
    let chol = cholesky(&SpdMatrix::from_symmetric(block))?;
    let cross: Vec<f64> = ni.iter().map(|&a| corr.between(locs, i, a)).collect();
    let b = chol.solve(&cross);
    let f = 1.0 - cross.iter().zip(&b).map(|(h, w)| h * w).sum::<f64>();
    if !(f > 0.0) {
        return Err(LinalgError::NotPositiveDefinite { index: i, pivot: f }.into());
    }
    Ok((b, f.min(1.0)))
}

/// `Σ_i log N(z_i; B_i z_{N_i}, F_i R)`.
pub fn nngp_joint_logpdf(z: &DMatrix<f64>, graph: &NeighborGraph, r: &SpdMatrix) -> Result<f64, LinalgError> {
    if z.ncols() != r.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: r.dim(),
            got: z.ncols(),
        });
    }
    if z.nrows() != graph.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: graph.len(),
            got: z.nrows(),
        });
    }
    let chol = cholesky(r)?;
    let p = r.dim() as f64;
    let w = graph.whitened_residuals(z);
    let mut total = 0.0;
    let mut row = vec![0.0; r.dim()];
    for i in 0..w.nrows() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = w[(i, j)];
        }
        // log N(resid; 0, F R) = log N(resid/√F; 0, R) − (p/2) log F
        total += mvn_logpdf_factored(&row, &chol) - 0.5 * p * graph.f(i).ln();
    }
    Ok(total)
}
