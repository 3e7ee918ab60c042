//! Mixed-type outcomes and the rank constraints they place on the latent
//! Gaussian values.
//!
//! Within a column, `y_k < y_i` forces `z_k < z_i`; tied observations are
//! mutually unconstrained and missing cells are unconstrained altogether.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("shape mismatch: outcomes are {expected:?}, latent matrix is {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("value {value} at row {row}, column {col} is not valid for a {kind} column")]
    KindMismatch {
        row: usize,
        col: usize,
        kind: ColumnKind,
        value: f64,
    },
    #[error("column {0} has fewer than two distinct observed values")]
    DegenerateColumn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Count,
    Binary,
    Ordinal,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Count => "count",
            ColumnKind::Binary => "binary",
            ColumnKind::Ordinal => "ordinal",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(Self::Continuous),
            "count" => Ok(Self::Count),
            "binary" => Ok(Self::Binary),
            "ordinal" => Ok(Self::Ordinal),
            other => Err(format!("unknown column kind '{other}'")),
        }
    }
}

impl ColumnKind {
    pub fn accepts(&self, v: f64) -> bool {
        match self {
            ColumnKind::Continuous => true,
            ColumnKind::Count => v >= 0.0 && v.fract() == 0.0,
            ColumnKind::Binary => v == 0.0 || v == 1.0,
            ColumnKind::Ordinal => v.fract() == 0.0,
        }
    }
}

/// n × p observations with per-column kinds and a missingness mask.
/// Missing cells hold `NaN` in `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedOutcomeMatrix {
    values: DMatrix<f64>,
    kinds: Vec<ColumnKind>,
    missing: DMatrix<bool>,
    names: Vec<String>,
}

impl MixedOutcomeMatrix {
    pub fn new(mut values: DMatrix<f64>, kinds: Vec<ColumnKind>, missing: DMatrix<bool>) -> Result<Self, RankError> {
        let (n, p) = values.shape();
        if kinds.len() != p || missing.shape() != (n, p) {
            return Err(RankError::ShapeMismatch {
                expected: (n, p),
                got: (missing.nrows(), kinds.len()),
            });
        }
        for col in 0..p {
            for row in 0..n {
                if missing[(row, col)] {
                    values[(row, col)] = f64::NAN;
                    continue;
                }
                let v = values[(row, col)];
                if !v.is_finite() {
                    return Err(RankError::NonFinite { row, col });
                }
                if !kinds[col].accepts(v) {
                    return Err(RankError::KindMismatch {
                        row,
                        col,
                        kind: kinds[col],
                        value: v,
                    });
                }
            }
        }
        let names = (1..=p).map(|j| format!("y{j}")).collect();
        Ok(Self {
            values,
            kinds,
            missing,
            names,
        })
    }

    /// All cells observed.
    pub fn complete(values: DMatrix<f64>, kinds: Vec<ColumnKind>) -> Result<Self, RankError> {
        let missing = DMatrix::from_element(values.nrows(), values.ncols(), false);
        Self::new(values, kinds, missing)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.p());
        self.names = names;
        self
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn missing(&self) -> &DMatrix<bool> {
        &self.missing
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[(row, col)]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        (!self.missing[(row, col)]).then(|| self.values[(row, col)])
    }

    /// Applies `f` to every observed value of column `col`.
    pub fn map_column(&self, col: usize, f: impl Fn(f64) -> f64) -> Result<Self, RankError> {
        let mut values = self.values.clone();
        for row in 0..self.n() {
            if !self.missing[(row, col)] {
                values[(row, col)] = f(values[(row, col)]);
            }
        }
        Ok(Self::new(values, self.kinds.clone(), self.missing.clone())?.with_names(self.names.clone()))
    }
}

/// Elementwise truncation bounds; `±∞` where a side is unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct RankBounds {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

/// Bounds from the literal set definition:
/// `lower = max{z_kj : y_kj < y_ij}`, `upper = min{z_kj : y_ij < y_kj}`.
pub fn extract_bounds(y: &MixedOutcomeMatrix, z: &DMatrix<f64>) -> Result<RankBounds, RankError> {
    let (n, p) = (y.n(), y.p());
    if z.shape() != (n, p) {
        return Err(RankError::ShapeMismatch {
            expected: (n, p),
            got: z.shape(),
        });
    }
    let mut lower = DMatrix::from_element(n, p, f64::NEG_INFINITY);
    let mut upper = DMatrix::from_element(n, p, f64::INFINITY);
    for j in 0..p {
        for i in 0..n {
            let Some(yi) = y.get(i, j) else { continue };
            for k in 0..n {
                let Some(yk) = y.get(k, j) else { continue };
                if yk < yi {
                    lower[(i, j)] = lower[(i, j)].max(z[(k, j)]);
                } else if yi < yk {
                    upper[(i, j)] = upper[(i, j)].min(z[(k, j)]);
                }
            }
        }
    }
    Ok(RankBounds { lower, upper })
}

/// `lower < z < upper` elementwise.
pub fn validate_latent(z: &DMatrix<f64>, b: &RankBounds) -> bool {
    z.shape() == b.lower.shape()
        && z.shape() == b.upper.shape()
        && z.iter()
            .zip(b.lower.iter().zip(b.upper.iter()))
            .all(|(v, (lo, hi))| lo < v && v < hi)
}

/// Level structure of one column: the sorted distinct observed values and
/// the sites holding each of them.
#[derive(Debug, Clone)]
struct ColumnLevels {
    level_of: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
}

impl ColumnLevels {
    fn new(y: &MixedOutcomeMatrix, j: usize) -> Self {
        let mut observed: Vec<(f64, usize)> = (0..y.n()).filter_map(|i| y.get(i, j).map(|v| (v, i))).collect();
        observed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut level_of = vec![None; y.n()];
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut last = None;
        for (v, i) in observed {
            if last != Some(v) {
                members.push(Vec::new());
                last = Some(v);
            }
            level_of[i] = Some(members.len() - 1);
            members.last_mut().unwrap().push(i);
        }
        Self { level_of, members }
    }
}

/// Precomputed per-column levels for fast per-site bounds.
///
/// When `z` is rank-consistent, every latent value at a lower level sits
/// below every value at a higher level, so the bound from the whole set
/// `{k : y_k < y_i}` equals the bound from the adjacent level only.
#[derive(Debug, Clone)]
pub struct RankStructure {
    columns: Vec<ColumnLevels>,
}

impl RankStructure {
    pub fn new(y: &MixedOutcomeMatrix) -> Self {
        Self {
            columns: (0..y.p()).map(|j| ColumnLevels::new(y, j)).collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    /// Number of distinct observed values in column `j`.
    pub fn distinct(&self, j: usize) -> usize {
        self.columns[j].members.len()
    }

    /// Columns with fewer than two distinct observed values.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.distinct(j) < 2).collect()
    }

    /// Truncation box for site `i` given the current latent matrix.
    pub fn site_bounds(&self, i: usize, z: &DMatrix<f64>, lower: &mut [f64], upper: &mut [f64]) {
        for (j, col) in self.columns.iter().enumerate() {
            lower[j] = f64::NEG_INFINITY;
            upper[j] = f64::INFINITY;
            let Some(level) = col.level_of[i] else { continue };
            if level > 0 {
                lower[j] = col.members[level - 1]
                    .iter()
                    .map(|&k| z[(k, j)])
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            if level + 1 < col.members.len() {
                upper[j] = col.members[level + 1]
                    .iter()
                    .map(|&k| z[(k, j)])
                    .fold(f64::INFINITY, f64::min);
            }
        }
    }

    /// Whether `z` respects the observed order in every column: each level's
    /// values lie strictly above every value of the level below.
    pub fn is_consistent(&self, z: &DMatrix<f64>) -> bool {
        self.columns.iter().enumerate().all(|(j, col)| {
            col.members.windows(2).all(|pair| {
                let below = pair[0].iter().map(|&k| z[(k, j)]).fold(f64::NEG_INFINITY, f64::max);
                let above = pair[1].iter().map(|&k| z[(k, j)]).fold(f64::INFINITY, f64::min);
                below < above
            })
        })
    }

    /// Normal scores `Φ⁻¹(midrank / (n_j + 1))`; missing cells get 0.
    pub fn normal_scores(&self, n: usize) -> DMatrix<f64> {
        let std = Normal::standard();
        let mut z = DMatrix::zeros(n, self.p());
        for (j, col) in self.columns.iter().enumerate() {
            let observed: usize = col.members.iter().map(Vec::len).sum();
            let mut below = 0usize;
            for group in &col.members {
                // ranks below+1 ..= below+len share their average
                let midrank = below as f64 + (group.len() as f64 + 1.0) / 2.0;
                let score = std.inverse_cdf(midrank / (observed as f64 + 1.0));
                for &i in group {
                    z[(i, j)] = score;
                }
                below += group.len();
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64], kind: ColumnKind) -> MixedOutcomeMatrix {
        MixedOutcomeMatrix::complete(DMatrix::from_column_slice(values.len(), 1, values), vec![kind]).unwrap()
    }

    #[test]
    fn constant_column_unbounded() {
        let y = column(&[2.0, 2.0, 2.0], ColumnKind::Count);
        let z = DMatrix::from_column_slice(3, 1, &[0.1, -0.4, 0.9]);
        let b = extract_bounds(&y, &z).unwrap();
        assert!(b.lower.iter().all(|v| *v == f64::NEG_INFINITY));
        assert!(b.upper.iter().all(|v| *v == f64::INFINITY));
        assert_eq!(RankStructure::new(&y).degenerate_columns(), vec![0]);
    }

    #[test]
    fn three_levels() {
        let y = column(&[1.0, 2.0, 3.0], ColumnKind::Continuous);
        let z = DMatrix::from_column_slice(3, 1, &[-0.5, 0.1, 0.7]);
        let b = extract_bounds(&y, &z).unwrap();
        assert_eq!(b.lower[(1, 0)], -0.5);
        assert_eq!(b.upper[(1, 0)], 0.7);
        assert_eq!(b.lower[(0, 0)], f64::NEG_INFINITY);
        assert_eq!(b.upper[(2, 0)], f64::INFINITY);
    }

    fn double_loop_oracle(y: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = y.len();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for i in 0..n {
            for k in 0..n {
                if y[k] < y[i] && z[k] > lo[i] {
                    lo[i] = z[k];
                }
                if y[i] < y[k] && z[k] < hi[i] {
                    hi[i] = z[k];
                }
            }
        }
        (lo, hi)
    }

    #[test]
    fn count_column_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let yv: Vec<f64> = (0..20).map(|_| rng.random_range(0..6) as f64).collect();
        let zv: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = extract_bounds(&column(&yv, ColumnKind::Count), &DMatrix::from_column_slice(20, 1, &zv)).unwrap();
        let (lo, hi) = double_loop_oracle(&yv, &zv);
        assert_eq!(b.lower.as_slice(), lo.as_slice());
        assert_eq!(b.upper.as_slice(), hi.as_slice());
    }

    #[test]
    fn validate_strict() {
        let b = RankBounds {
            lower: DMatrix::from_element(1, 2, 0.0),
            upper: DMatrix::from_element(1, 2, 1.0),
        };
        assert!(validate_latent(&DMatrix::from_row_slice(1, 2, &[0.5, 0.2]), &b));
        assert!(!validate_latent(&DMatrix::from_row_slice(1, 2, &[0.0, 0.2]), &b));
        let free = RankBounds {
            lower: DMatrix::from_element(1, 1, f64::NEG_INFINITY),
            upper: DMatrix::from_element(1, 1, f64::INFINITY),
        };
        assert!(validate_latent(&DMatrix::from_element(1, 1, 1e300), &free));
    }

    #[test]
    fn missing_is_unbounded() {
        let values = DMatrix::from_column_slice(3, 1, &[1.0, 5.0, 2.0]);
        let mut missing = DMatrix::from_element(3, 1, false);
        missing[(1, 0)] = true;
        let y = MixedOutcomeMatrix::new(values, vec![ColumnKind::Continuous], missing).unwrap();
        let z = DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let b = extract_bounds(&y, &z).unwrap();
        assert_eq!(b.lower[(1, 0)], f64::NEG_INFINITY);
        assert_eq!(b.upper[(1, 0)], f64::INFINITY);
        assert_eq!(b.upper[(0, 0)], 1.0);
    }

    #[test]
    fn kind_validation() {
        let err = MixedOutcomeMatrix::complete(
            DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]),
            vec![ColumnKind::Binary],
        )
        .unwrap_err();
        assert!(matches!(err, RankError::KindMismatch { row: 2, .. }));
        assert!(
            MixedOutcomeMatrix::complete(DMatrix::from_column_slice(2, 1, &[1.5, 2.0]), vec![ColumnKind::Count])
                .is_err()
        );
    }

    #[test]
    fn shape_mismatch() {
        let y = column(&[1.0, 2.0], ColumnKind::Continuous);
        assert!(matches!(
            extract_bounds(&y, &DMatrix::zeros(3, 1)),
            Err(RankError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn normal_scores_no_ties() {
        let y = column(&[3.0, 1.0, 2.0], ColumnKind::Continuous);
        let z = RankStructure::new(&y).normal_scores(3);
        let std = Normal::standard();
        assert_eq!(z[(0, 0)], std.inverse_cdf(0.75));
        assert_eq!(z[(1, 0)], std.inverse_cdf(0.25));
        assert_eq!(z[(2, 0)], std.inverse_cdf(0.5));
    }

    #[test]
    fn normal_scores_all_missing_column() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let mut missing = DMatrix::from_element(3, 2, false);
        for i in 0..3 {
            missing[(i, 1)] = true;
        }
        let y = MixedOutcomeMatrix::new(values, vec![ColumnKind::Continuous; 2], missing).unwrap();
        let rs = RankStructure::new(&y);
        let z = rs.normal_scores(3);
        assert!((0..3).all(|i| z[(i, 1)] == 0.0));
        let b = extract_bounds(&y, &z).unwrap();
        assert!((0..3).all(|i| b.lower[(i, 1)].is_infinite() && b.upper[(i, 1)].is_infinite()));
    }

    fn mixed_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<bool>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..5, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(prop::bool::weighted(0.15), n),
            )
        })
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance((yv, zv, miss) in mixed_strategy()) {
            let n = yv.len();
            let y = MixedOutcomeMatrix::new(
                DMatrix::from_column_slice(n, 1, &yv),
                vec![ColumnKind::Continuous],
                DMatrix::from_column_slice(n, 1, &miss),
            ).unwrap();
            let z = DMatrix::from_column_slice(n, 1, &zv);
            let base = extract_bounds(&y, &z).unwrap();
            let ex = extract_bounds(&y.map_column(0, f64::exp).unwrap(), &z).unwrap();
            let affine = extract_bounds(&y.map_column(0, |v| 2.0 * v + 7.0).unwrap(), &z).unwrap();
            prop_assert_eq!(&base, &ex);
            prop_assert_eq!(&base, &affine);
        }

        #[test]
        fn fast_bounds_match_literal_on_consistent_latents((yv, _zv, miss) in mixed_strategy()) {
            let n = yv.len();
            let y = MixedOutcomeMatrix::new(
                DMatrix::from_column_slice(n, 1, &yv),
                vec![ColumnKind::Ordinal],
                DMatrix::from_column_slice(n, 1, &miss),
            ).unwrap();
            let rs = RankStructure::new(&y);
            let z = rs.normal_scores(n);
            let literal = extract_bounds(&y, &z).unwrap();
            prop_assert!(validate_latent(&z, &literal));
            let (mut lo, mut hi) = ([0.0], [0.0]);
            for i in 0..n {
                rs.site_bounds(i, &z, &mut lo, &mut hi);
                prop_assert_eq!(lo[0], literal.lower[(i, 0)]);
                prop_assert_eq!(hi[0], literal.upper[(i, 0)]);
            }
        }

        #[test]
        fn fast_consistency_matches_literal((yv, zv, miss) in mixed_strategy()) {
            let n = yv.len();
            let y = MixedOutcomeMatrix::new(
                DMatrix::from_column_slice(n, 1, &yv),
                vec![ColumnKind::Count],
                DMatrix::from_column_slice(n, 1, &miss),
            ).unwrap();
            let rs = RankStructure::new(&y);
            let z = DMatrix::from_column_slice(n, 1, &zv);
            let literal = validate_latent(&z, &extract_bounds(&y, &z).unwrap());
            prop_assert_eq!(rs.is_consistent(&z), literal);
            prop_assert!(rs.is_consistent(&rs.normal_scores(n)));
        }
    }
}
