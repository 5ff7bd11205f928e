//! Covariance functions and Gram matrices.
//!
//! Every kernel family here is symmetric and nonnegative. The indexed families
//! (`DiagonalIndicator` with a weight table, `BlockConstant`, `ProjectionMatrix`)
//! live on a finite ground set: a point is a one-dimensional feature vector whose
//! single coordinate is a nonnegative integer index into that set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense feature vector.
pub type Point = Vec<f64>;

fn one() -> f64 {
    1.0
}

/// Covariance function specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-|s - t| / tau)`
    Exponential { tau: f64 },
    /// `exp(-|s - t|^2 / tau^2)`
    Gaussian { tau: f64 },
    /// `delta(s, t) f(t)`. With an empty table `f` is the constant `level`;
    /// otherwise `f(t) = table[t]` over an indexed ground set.
    DiagonalIndicator {
        #[serde(default = "one")]
        level: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        table: Vec<f64>,
    },
    /// `c` everywhere.
    Constant { c: f64 },
    /// `levels[b]` when both indices fall in block `b`, zero otherwise. The
    /// block of ground element `i` is `block_of[i]`.
    BlockConstant { block_of: Vec<usize>, levels: Vec<f64> },
    /// An explicit symmetric matrix over an indexed ground set.
    ProjectionMatrix { matrix: Vec<Vec<f64>> },
}

impl Kernel {
    pub fn exponential(tau: f64) -> Self {
        Kernel::Exponential { tau }
    }

    pub fn gaussian(tau: f64) -> Self {
        Kernel::Gaussian { tau }
    }

    pub fn constant(c: f64) -> Self {
        Kernel::Constant { c }
    }

    pub fn diagonal(level: f64) -> Self {
        Kernel::DiagonalIndicator {
            level,
            table: Vec::new(),
        }
    }

    /// Short family name, as used in config files.
    pub fn family(&self) -> &'static str {
        match self {
            Kernel::Exponential { .. } => "exponential",
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::DiagonalIndicator { .. } => "diagonal_indicator",
            Kernel::Constant { .. } => "constant",
            Kernel::BlockConstant { .. } => "block_constant",
            Kernel::ProjectionMatrix { .. } => "projection_matrix",
        }
    }

    /// Length scale, for the families that have one.
    pub fn tau(&self) -> Option<f64> {
        match *self {
            Kernel::Exponential { tau } | Kernel::Gaussian { tau } => Some(tau),
            _ => None,
        }
    }

    /// Same family with a different length scale. Families without a length
    /// scale are returned unchanged.
    pub fn with_tau(&self, tau: f64) -> Self {
        match self {
            Kernel::Exponential { .. } => Kernel::Exponential { tau },
            Kernel::Gaussian { .. } => Kernel::Gaussian { tau },
            other => other.clone(),
        }
    }

    /// Full parameter validation. `eval` only repeats the cheap scalar checks.
    pub fn validate(&self) -> Result<()> {
        self.check_scalars()?;
        match self {
            Kernel::DiagonalIndicator { table, .. } => {
                if let Some(v) = table.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidKernel(format!(
                        "diagonal table entries must be positive, got {v}"
                    )));
                }
            }
            Kernel::BlockConstant { block_of, levels } => {
                if let Some(v) = levels.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidKernel(format!(
                        "block levels must be positive, got {v}"
                    )));
                }
                if let Some(b) = block_of.iter().find(|b| **b >= levels.len()) {
                    return Err(Error::InvalidKernel(format!(
                        "block id {b} has no level ({} levels)",
                        levels.len()
                    )));
                }
            }
            Kernel::ProjectionMatrix { matrix } => {
                let n = matrix.len();
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::NotSquare {
                            rows: n,
                            row: i,
                            cols: row.len(),
                        });
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(Error::InvalidKernel(format!(
                                "projection entry ({i},{j}) = {v} is not a nonnegative number"
                            )));
                        }
                        if v != matrix[j][i] {
                            return Err(Error::InvalidKernel(format!(
                                "projection matrix is not symmetric at ({i},{j})"
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn check_scalars(&self) -> Result<()> {
        match *self {
            Kernel::Exponential { tau } | Kernel::Gaussian { tau } => {
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(Error::InvalidKernel(format!("tau must be positive, got {tau}")));
                }
            }
            Kernel::Constant { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidKernel(format!("c must be positive, got {c}")));
                }
            }
            Kernel::DiagonalIndicator { level, .. } => {
                if !(level.is_finite() && level > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "diagonal level must be positive, got {level}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Evaluate `k(s, t)`.
    pub fn eval(&self, s: &[f64], t: &[f64]) -> Result<f64> {
        if s.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: t.len(),
            });
        }
        self.check_scalars()?;
        let v = match self {
            Kernel::Exponential { tau } => (-euclidean(s, t) / tau).exp(),
            Kernel::Gaussian { tau } => (-squared_euclidean(s, t) / (tau * tau)).exp(),
            Kernel::Constant { c } => *c,
            Kernel::DiagonalIndicator { level, table } => {
                if s != t {
                    0.0
                } else if table.is_empty() {
                    *level
                } else {
                    table[ground_index(t, table.len())?]
                }
            }
            Kernel::BlockConstant { block_of, levels } => {
                let a = block_of[ground_index(s, block_of.len())?];
                let b = block_of[ground_index(t, block_of.len())?];
                if a == b {
                    *levels.get(a).ok_or_else(|| {
                        Error::InvalidKernel(format!("block id {a} has no level"))
                    })?
                } else {
                    0.0
                }
            }
            Kernel::ProjectionMatrix { matrix } => {
                let i = ground_index(s, matrix.len())?;
                let j = ground_index(t, matrix.len())?;
                matrix[i][j]
            }
        };
        Ok(v)
    }
}

fn ground_index(p: &[f64], size: usize) -> Result<usize> {
    if p.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: p.len(),
        });
    }
    let v = p[0];
    if v < 0.0 || v.fract() != 0.0 || v as usize >= size {
        return Err(Error::InvalidParameter(format!(
            "{v} is not an index into a ground set of size {size}"
        )));
    }
    Ok(v as usize)
}

pub fn squared_euclidean(s: &[f64], t: &[f64]) -> f64 {
    s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn euclidean(s: &[f64], t: &[f64]) -> f64 {
    squared_euclidean(s, t).sqrt()
}

/// Median of all pairwise Euclidean distances; 0 for fewer than two points.
pub fn median_pairwise_distance(points: &[Point]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(euclidean(&points[i], &points[j]));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    if d.len() % 2 == 1 {
        d[m]
    } else {
        0.5 * (d[m - 1] + d[m])
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn filled(n: usize, v: f64) -> Self {
        SquareMatrix {
            n,
            data: vec![v; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SquareMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row: i,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Principal submatrix on `idx`, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Bordered matrix: this matrix with `t` appended as the last index.
    pub fn bordered(&self, query: &QueryColumn) -> Result<Self> {
        if query.cross.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: query.cross.len(),
            });
        }
        let n = self.n;
        Ok(Self::from_fn(n + 1, |i, j| match (i == n, j == n) {
            (false, false) => self.get(i, j),
            (true, false) => query.cross[j],
            (false, true) => query.cross[i],
            (true, true) => query.self_sim,
        }))
    }
}

/// Kernel values linking a query point `t` to a training set: `K(t, t)` and
/// `K(t, x_i)` for every training point.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryColumn {
    pub self_sim: f64,
    pub cross: Vec<f64>,
}

/// `K(x)` over a point set, together with the kernel and points it came from.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    kernel: Kernel,
    points: Vec<Point>,
    entries: SquareMatrix,
    diag: Vec<f64>,
}

impl GramMatrix {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn query_column(&self, t: &[f64]) -> Result<QueryColumn> {
        if let Some(p) = self.points.first() {
            if p.len() != t.len() {
                return Err(Error::DimensionMismatch {
                    expected: p.len(),
                    got: t.len(),
                });
            }
        }
        let cross = self
            .points
            .iter()
            .map(|x| self.kernel.eval(t, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(QueryColumn {
            self_sim: self.kernel.eval(t, t)?,
            cross,
        })
    }

    /// Index of the first point with a non-positive diagonal entry.
    pub fn first_nonpositive_diagonal(&self) -> Option<usize> {
        self.diag.iter().position(|&d| !(d > 0.0))
    }
}

/// Build `K(x)`. Only the upper triangle is evaluated; the lower triangle is a
/// copy, so the result is exactly symmetric.
pub fn gram(kernel: &Kernel, points: &[Point]) -> Result<GramMatrix> {
    kernel.validate()?;
    if let Some(first) = points.first() {
        let d = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    let n = points.len();
    let mut entries = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&points[i], &points[j])?;
            entries.set(i, j, v);
            entries.set(j, i, v);
        }
    }
    let diag = entries.diagonal();
    Ok(GramMatrix {
        kernel: kernel.clone(),
        points: points.to_vec(),
        entries,
        diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_self_similarity_is_one() {
        let k = Kernel::gaussian(1.0);
        assert_eq!(k.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
    }

    #[test]
    fn exponential_at_unit_distance() {
        let k = Kernel::exponential(1.0);
        let v = k.eval(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn diagonal_indicator() {
        let k = Kernel::diagonal(2.0);
        assert_eq!(k.eval(&[1.0], &[2.0]).unwrap(), 0.0);
        assert_eq!(k.eval(&[1.0], &[1.0]).unwrap(), 2.0);

        let table = Kernel::DiagonalIndicator {
            level: 1.0,
            table: vec![0.5, 3.0],
        };
        assert_eq!(table.eval(&[1.0], &[1.0]).unwrap(), 3.0);
        assert!(table.eval(&[2.0], &[2.0]).is_err());
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(
            Kernel::gaussian(1.0).eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Kernel::gaussian(0.0).eval(&[0.0], &[1.0]).is_err());
        assert!(Kernel::exponential(-1.0).eval(&[0.0], &[1.0]).is_err());
        assert!(Kernel::constant(0.0).eval(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn constant_gram() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0]];
        let g = gram(&Kernel::constant(1.0), &pts).unwrap();
        assert_eq!(g.entries(), &SquareMatrix::filled(3, 1.0));
    }

    #[test]
    fn gaussian_gram_two_points() {
        let g = gram(&Kernel::gaussian(1.0), &[vec![0.0], vec![1.0]]).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(g.entries().rows(), vec![vec![1.0, e], vec![e, 1.0]]);
    }

    #[test]
    fn empty_gram() {
        let g = gram(&Kernel::gaussian(1.0), &[]).unwrap();
        assert_eq!(g.len(), 0);
        assert!(g.entries().is_empty());
    }

    #[test]
    fn gram_dimension_mismatch() {
        let r = gram(&Kernel::gaussian(1.0), &[vec![0.0], vec![1.0, 2.0]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn block_constant_structure() {
        let k = Kernel::BlockConstant {
            block_of: vec![0, 1, 0, 1, 2],
            levels: vec![2.0, 0.5, 3.0],
        };
        let pts: Vec<Point> = (0..5).map(|i| vec![i as f64]).collect();
        let g = gram(&k, &pts).unwrap();
        let block_of = [0usize, 1, 0, 1, 2];
        let levels = [2.0, 0.5, 3.0];
        for i in 0..5 {
            for j in 0..5 {
                let want = if block_of[i] == block_of[j] {
                    levels[block_of[i]]
                } else {
                    0.0
                };
                assert_eq!(g.get(i, j), want);
            }
        }
    }

    #[test]
    fn projection_validation() {
        let bad = Kernel::ProjectionMatrix {
            matrix: vec![vec![1.0, 0.2], vec![0.1, 1.0]],
        };
        assert!(bad.validate().is_err());
        let neg = Kernel::ProjectionMatrix {
            matrix: vec![vec![0.5, -0.5], vec![-0.5, 0.5]],
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn kernel_serde_round_trip() {
        let k = Kernel::exponential(0.75);
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"family":"exponential","tau":0.75}"#);
        let back: Kernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn median_distance() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        // distances 1, 3, 2
        assert_eq!(median_pairwise_distance(&pts), 2.0);
    }

    fn arb_points() -> impl Strategy<Value = Vec<Point>> {
        (1usize..4).prop_flat_map(|d| {
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 0..12)
        })
    }

    proptest! {
        #[test]
        fn gram_symmetric_nonnegative(points in arb_points(), tau in 0.1f64..5.0, expo in any::<bool>()) {
            let k = if expo { Kernel::exponential(tau) } else { Kernel::gaussian(tau) };
            let g = gram(&k, &points).unwrap();
            prop_assert!(g.entries().is_symmetric());
            for i in 0..g.len() {
                prop_assert_eq!(g.get(i, i), 1.0);
                for j in 0..g.len() {
                    prop_assert!(g.get(i, j) >= 0.0);
                }
            }
        }

        #[test]
        fn eval_symmetric(s in prop::collection::vec(-5.0f64..5.0, 3), t in prop::collection::vec(-5.0f64..5.0, 3), tau in 0.1f64..5.0) {
            for k in [Kernel::exponential(tau), Kernel::gaussian(tau), Kernel::diagonal(tau)] {
                prop_assert_eq!(k.eval(&s, &t).unwrap(), k.eval(&t, &s).unwrap());
            }
        }
    }
}
