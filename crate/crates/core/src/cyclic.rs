//! Cyclic-expansion approximations to permanental ratios.
//!
//! The ratio `R_n(t; x) = per_a(K(x + t)) / per_a(K(x))` expands by the length
//! of the cycle through `t`. Truncating that expansion after cycles of length
//! `k + 1`, and approximating each nested leave-out ratio one order lower,
//! gives `R^(k)`:
//!
//! | k | cycles through `t` | query cost |
//! |---|--------------------|------------|
//! | 0 | 1                  | O(1)       |
//! | 1 | up to 2            | O(n)       |
//! | 2 | up to 3            | O(n^2)     |
//! | 3 | up to 4            | O(n^3)     |
//!
//! The leave-one-out and leave-two-out denominators depend only on the training
//! points, so they are computed once in a [`RatioTable`].
//!
//! The cyclic ratio `C^(k) = lim_{a -> 0+} R^(k)` is obtained by running the very
//! same recursion over [`GradedValue`] series instead of floats.

use std::ops::{Add, Mul};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::GradedValue;
use crate::kernel::{GramMatrix, QueryColumn, SquareMatrix};
use crate::permanent::Alpha;

/// Truncation order `k` of the cyclic approximation (cycles through the query
/// point of length at most `k + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ApproxOrder(u8);

impl ApproxOrder {
    pub const UNI_CYCLE: ApproxOrder = ApproxOrder(0);
    pub const TWO_CYCLE: ApproxOrder = ApproxOrder(1);
    pub const THREE_CYCLE: ApproxOrder = ApproxOrder(2);
    pub const FOUR_CYCLE: ApproxOrder = ApproxOrder(3);

    pub fn new(k: u8) -> Result<Self> {
        if k <= 3 {
            Ok(ApproxOrder(k))
        } else {
            Err(Error::InvalidParameter(format!(
                "approximation order must be 0..=3, got {k}"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> [ApproxOrder; 4] {
        [
            Self::UNI_CYCLE,
            Self::TWO_CYCLE,
            Self::THREE_CYCLE,
            Self::FOUR_CYCLE,
        ]
    }
}

impl TryFrom<u8> for ApproxOrder {
    type Error = Error;
    fn try_from(k: u8) -> Result<Self> {
        ApproxOrder::new(k)
    }
}

impl From<ApproxOrder> for u8 {
    fn from(o: ApproxOrder) -> u8 {
        o.0
    }
}

/// Arithmetic the recursion needs. Kernel entries are always plain floats;
/// only `alpha` and quantities derived from it use this type.
pub(crate) trait RatioScalar:
    Copy + Send + Sync + Add<Output = Self> + Mul<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn checked_div(self, d: Self) -> Option<Self>;
}

impl RatioScalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }

    #[inline]
    fn checked_div(self, d: Self) -> Option<Self> {
        if d == 0.0 {
            None
        } else {
            Some(self / d)
        }
    }
}

impl RatioScalar for GradedValue {
    fn constant(v: f64) -> Self {
        GradedValue::constant(v)
    }

    fn checked_div(self, d: Self) -> Option<Self> {
        GradedValue::checked_div(self, d)
    }
}

fn degenerate(what: &str, i: usize) -> Error {
    Error::Degenerate(format!("{what} for training point {i} is zero"))
}

/// `sum_{k != a, k != b} row[k] * w[k]`, skipping the excluded indices rather
/// than subtracting them.
#[inline]
fn dot_excluding(row: &[f64], w: &[f64], a: usize, b: usize) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let dot = |r: &[f64], v: &[f64]| r.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    dot(&row[..lo], &w[..lo])
        + if hi > lo { dot(&row[lo + 1..hi], &w[lo + 1..hi]) } else { 0.0 }
        + dot(&row[hi + 1..], &w[hi + 1..])
}

/// Leave-out denominators for one training set.
#[derive(Debug, Clone)]
pub(crate) struct Tables<S> {
    order: ApproxOrder,
    alpha: S,
    // R^(1)(x_i; x_{-i})
    r1_loo: Vec<S>,
    // R^(1)(x_j; x_{-i-j}), row-major n x n, diagonal unused
    r1_l2o: Vec<S>,
    // R^(2)(x_i; x_{-i})
    r2_loo: Vec<S>,
}

impl<S: RatioScalar> Tables<S> {
    pub(crate) fn build(k: &SquareMatrix, alpha: S, order: ApproxOrder) -> Result<Self> {
        let n = k.n();
        if let Some(i) = (0..n).find(|&i| !(k.get(i, i) > 0.0)) {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / k.get(i, i)).collect();
        // s[j][m] = K(j,m)^2 / K(m,m)
        let two_cycle = |j: usize, m: usize| {
            let v = k.get(j, m);
            v * v * inv_diag[m]
        };

        let mut tables = Tables {
            order,
            alpha,
            r1_loo: Vec::new(),
            r1_l2o: Vec::new(),
            r2_loo: Vec::new(),
        };
        if order < ApproxOrder::THREE_CYCLE {
            return Ok(tables);
        }

        tables.r1_loo = (0..n)
            .map(|i| {
                let s: f64 = (0..n).filter(|&m| m != i).map(|m| two_cycle(i, m)).sum();
                alpha * S::constant(k.get(i, i)) + S::constant(s)
            })
            .collect();
        if order < ApproxOrder::FOUR_CYCLE {
            return Ok(tables);
        }

        tables.r1_l2o = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                if i == j {
                    return S::constant(0.0);
                }
                let s: f64 = (0..n)
                    .filter(|&m| m != i && m != j)
                    .map(|m| two_cycle(j, m))
                    .sum();
                alpha * S::constant(k.get(j, j)) + S::constant(s)
            })
            .collect();

        let r1_l2o = &tables.r1_l2o;
        tables.r2_loo = (0..n)
            .into_par_iter()
            .map(|i| {
                let row_i = k.row(i);
                let w: Vec<f64> = (0..n).map(|l| row_i[l] * inv_diag[l]).collect();
                let mut acc = alpha * S::constant(k.get(i, i));
                for m in 0..n {
                    let kim = row_i[m];
                    if m == i || kim == 0.0 {
                        continue;
                    }
                    let three = kim * dot_excluding(k.row(m), &w, i, m);
                    let num = alpha * S::constant(kim * kim) + S::constant(three);
                    acc = acc
                        + num
                            .checked_div(r1_l2o[i * n + m])
                            .ok_or_else(|| degenerate("leave-two-out two-cycle ratio", m))?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(tables)
    }

    pub(crate) fn query(
        &self,
        k: &SquareMatrix,
        q: &QueryColumn,
        order: ApproxOrder,
    ) -> Result<S> {
        if order > self.order {
            return Err(Error::TableOrder {
                built: self.order.get(),
                requested: order.get(),
            });
        }
        let n = k.n();
        if q.cross.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.cross.len(),
            });
        }
        let alpha = self.alpha;
        let kt = &q.cross;
        let base = alpha * S::constant(q.self_sim);
        let value = match order.get() {
            0 => base,
            1 => {
                let s: f64 = (0..n).map(|i| kt[i] * kt[i] / k.get(i, i)).sum();
                base + S::constant(s)
            }
            2 => {
                let w: Vec<f64> = (0..n).map(|j| kt[j] / k.get(j, j)).collect();
                let mut acc = base;
                for i in 0..n {
                    if kt[i] == 0.0 {
                        continue;
                    }
                    let three = kt[i] * dot_excluding(k.row(i), &w, i, i);
                    let num = alpha * S::constant(kt[i] * kt[i]) + S::constant(three);
                    acc = acc
                        + num
                            .checked_div(self.r1_loo[i])
                            .ok_or_else(|| degenerate("leave-one-out two-cycle ratio", i))?;
                }
                acc
            }
            _ => {
                let w: Vec<f64> = (0..n).map(|j| kt[j] / k.get(j, j)).collect();
                let mut acc = base;
                for i in 0..n {
                    let kti = kt[i];
                    if kti == 0.0 {
                        continue;
                    }
                    let row_i = k.row(i);
                    let mut inner = alpha * S::constant(kti * kti);
                    for j in 0..n {
                        let kij = row_i[j];
                        if j == i || kij == 0.0 {
                            continue;
                        }
                        let lead = kti * kij;
                        let three = lead * kt[j];
                        let four = lead * dot_excluding(k.row(j), &w, i, j);
                        let num = alpha * S::constant(three) + S::constant(four);
                        inner = inner
                            + num.checked_div(self.r1_l2o[i * n + j]).ok_or_else(|| {
                                degenerate("leave-two-out two-cycle ratio", j)
                            })?;
                    }
                    acc = acc
                        + inner
                            .checked_div(self.r2_loo[i])
                            .ok_or_else(|| degenerate("leave-one-out three-cycle ratio", i))?;
                }
                acc
            }
        };
        Ok(value)
    }
}

/// Precomputed leave-one-out and leave-two-out denominators for one training
/// set, at a fixed `alpha`.
#[derive(Debug, Clone)]
pub struct RatioTable {
    gram: GramMatrix,
    alpha: Alpha,
    tables: Tables<f64>,
}

impl RatioTable {
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn order(&self) -> ApproxOrder {
        self.tables.order
    }

    pub fn len(&self) -> usize {
        self.gram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.is_empty()
    }

    /// `R^(1)(x_i; x_{-i})`; empty below order 2.
    pub fn r1_loo(&self) -> &[f64] {
        &self.tables.r1_loo
    }

    /// `R^(2)(x_i; x_{-i})`; empty below order 3.
    pub fn r2_loo(&self) -> &[f64] {
        &self.tables.r2_loo
    }

    /// `R^(1)(x_j; x_{-i-j})` for `i != j`; `None` on the diagonal or below order 3.
    pub fn r1_l2o(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.len();
        if i == j || self.tables.r1_l2o.is_empty() || i >= n || j >= n {
            None
        } else {
            Some(self.tables.r1_l2o[i * n + j])
        }
    }

    /// Approximate ratio for a precomputed query column.
    pub fn ratio_for_column(&self, q: &QueryColumn, order: ApproxOrder) -> Result<f64> {
        let v = self.tables.query(self.gram.entries(), q, order)?;
        if v < 0.0 {
            log::warn!("order-{} cyclic approximation is negative: {v}", order.get());
        }
        Ok(v)
    }
}

/// Precompute the denominators `ratio_approx` needs at `order`.
pub fn build_ratio_table(gram: GramMatrix, alpha: Alpha, order: ApproxOrder) -> Result<RatioTable> {
    if let Some(i) = gram.first_nonpositive_diagonal() {
        return Err(Error::ZeroDiagonal { index: i });
    }
    let tables = Tables::build(gram.entries(), alpha.get(), order)?;
    Ok(RatioTable {
        gram,
        alpha,
        tables,
    })
}

/// `R^(k)(t; x)` where `x` are the table's training points.
pub fn ratio_approx(t: &[f64], table: &RatioTable, order: ApproxOrder) -> Result<f64> {
    let q = table.gram.query_column(t)?;
    table.ratio_for_column(&q, order)
}

/// Denominator tables evaluated at `alpha -> 0+`, for cyclic ratios.
#[derive(Debug, Clone)]
pub struct CyclicTable {
    gram: GramMatrix,
    tables: Tables<GradedValue>,
}

impl CyclicTable {
    pub fn build(gram: GramMatrix, order: ApproxOrder) -> Result<Self> {
        if gram.is_empty() {
            return Err(Error::EmptyCyclicProduct);
        }
        let tables = Tables::build(gram.entries(), GradedValue::alpha(), order)?;
        Ok(CyclicTable { gram, tables })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn order(&self) -> ApproxOrder {
        self.tables.order
    }

    /// `C^(k)` together with the full series it is the limit of.
    pub fn series_for_column(&self, q: &QueryColumn, order: ApproxOrder) -> Result<GradedValue> {
        self.tables.query(self.gram.entries(), q, order)
    }

    pub fn ratio_for_column(&self, q: &QueryColumn, order: ApproxOrder) -> Result<f64> {
        let s = self.series_for_column(q, order)?;
        s.limit().ok_or_else(|| {
            Error::Degenerate(format!(
                "order-{} cyclic ratio diverges as alpha -> 0 ({s})",
                order.get()
            ))
        })
    }

    pub fn ratio(&self, t: &[f64], order: ApproxOrder) -> Result<f64> {
        let q = self.gram.query_column(t)?;
        self.ratio_for_column(&q, order)
    }
}

/// `C^(k)(t; x) = lim_{a -> 0+} R^(k)(t; x)`.
pub fn cyclic_ratio_approx(t: &[f64], gram: &GramMatrix, order: ApproxOrder) -> Result<f64> {
    CyclicTable::build(gram.clone(), order)?.ratio(t, order)
}

/// Numerical stand-in for `C^(k)`: `R^(k)` at `alpha = 1e-6` and `1e-7`,
/// extrapolated linearly to zero. Only a cross-check for [`cyclic_ratio_approx`];
/// it breaks down exactly where the limit is a 0/0 form.
pub fn cyclic_ratio_small_alpha(t: &[f64], gram: &GramMatrix, order: ApproxOrder) -> Result<f64> {
    let (h1, h2) = (1e-6, 1e-7);
    let q = gram.query_column(t)?;
    let eval = |h: f64| -> Result<f64> {
        Tables::build(gram.entries(), h, order)?.query(gram.entries(), &q, order)
    };
    let (r1, r2) = (eval(h1)?, eval(h2)?);
    Ok(r2 - h2 * (r1 - r2) / (h1 - h2))
}

/// Matrix structures with closed-form exact ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Diagonal,
    Constant,
    BlockConstant,
}

impl Structure {
    fn name(self) -> &'static str {
        match self {
            Structure::Diagonal => "diagonal",
            Structure::Constant => "constant",
            Structure::BlockConstant => "block-constant",
        }
    }
}

/// Blocks of a block-diagonal matrix with constant nonzero blocks, with their
/// levels, or `None` if the matrix is not of that form.
pub fn constant_blocks(k: &SquareMatrix) -> Option<Vec<(Vec<usize>, f64)>> {
    let n = k.n();
    let mut block_of = vec![usize::MAX; n];
    let mut blocks: Vec<(Vec<usize>, f64)> = Vec::new();
    for i in 0..n {
        if block_of[i] != usize::MAX {
            continue;
        }
        let c = k.get(i, i);
        if c == 0.0 {
            return None;
        }
        let members: Vec<usize> = (i..n).filter(|&j| k.get(i, j) != 0.0).collect();
        for &j in &members {
            if block_of[j] != usize::MAX {
                return None;
            }
            block_of[j] = blocks.len();
        }
        blocks.push((members, c));
    }
    for i in 0..n {
        for j in 0..n {
            let v = k.get(i, j);
            let want = if block_of[i] == block_of[j] {
                blocks[block_of[i]].1
            } else {
                0.0
            };
            if v != want {
                return None;
            }
        }
    }
    Some(blocks)
}

/// Exact ratio for a training Gram matrix with diagonal, constant, or
/// block-constant structure.
pub fn closed_form_ratio_for_column(
    k: &SquareMatrix,
    q: &QueryColumn,
    alpha: f64,
    structure: Structure,
) -> Result<f64> {
    let n = k.n();
    if q.cross.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.cross.len(),
        });
    }
    let blocks = constant_blocks(k).ok_or(Error::Structure(structure.name()))?;
    let ok = match structure {
        Structure::Diagonal => blocks.iter().all(|(b, _)| b.len() == 1),
        Structure::Constant => blocks.len() <= 1,
        Structure::BlockConstant => true,
    };
    if !ok {
        return Err(Error::Structure(structure.name()));
    }
    let kt = &q.cross;
    let mut value = alpha * q.self_sim;
    for (members, c) in &blocks {
        let den = c * (alpha + members.len() as f64 - 1.0);
        let sq: f64 = members.iter().map(|&i| kt[i] * kt[i]).sum();
        let mut cross = 0.0;
        for &i in members {
            for &j in members {
                if i != j {
                    cross += kt[i] * kt[j];
                }
            }
        }
        value += (alpha * sq + cross) / den;
    }
    Ok(value)
}

pub fn closed_form_ratio(
    t: &[f64],
    gram: &GramMatrix,
    alpha: f64,
    structure: Structure,
) -> Result<f64> {
    let q = gram.query_column(t)?;
    closed_form_ratio_for_column(gram.entries(), &q, alpha, structure)
}
