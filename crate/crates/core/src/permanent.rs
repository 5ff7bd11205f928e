//! Exact alpha-permanents and cyclic product sums by permutation enumeration.
//!
//! These are exponential-time routines meant for small matrices. They are the
//! reference every approximation in [`crate::cyclic`] is checked against, so
//! they stay deliberately plain: enumerate every permutation, track its cycle
//! count, and add up products with compensated summation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram, Kernel, Point, QueryColumn, SquareMatrix};

/// Largest matrix order the exact routines accept unless told otherwise.
/// 11! is about 4e7 permutations.
pub const DEFAULT_EXACT_CAP: usize = 11;

/// Positive shape parameter of a permanental process.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {value}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// A set partition of `{0, .., n-1}`, kept in canonical form: every block
/// sorted, blocks ordered by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
            for &i in b.iter() {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for {n} items"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { blocks })
    }

    /// Partition induced by equal labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot: std::collections::HashMap<usize, usize> = Default::default();
        for (i, &l) in labels.iter().enumerate() {
            let b = *slot.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i);
        }
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Block index of every item.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }

    /// Every set partition of `{0, .., n-1}` (Bell(n) of them), generated from
    /// restricted growth strings.
    pub fn all(n: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        let mut rgs = vec![0usize; n];
        fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if i == rgs.len() {
                out.push(Partition::from_labels(rgs));
                return;
            }
            for v in 0..=max + 1 {
                rgs[i] = v;
                rec(i + 1, max.max(v), rgs, out);
            }
        }
        if n == 0 {
            out.push(Partition { blocks: Vec::new() });
        } else {
            rgs[0] = 0;
            rec(1, 0, &mut rgs, &mut out);
        }
        out
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact evaluator with a configurable size cap.
#[derive(Debug, Clone, Copy)]
pub struct ExactEngine {
    pub cap: usize,
}

impl Default for ExactEngine {
    fn default() -> Self {
        ExactEngine {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

struct CycleEnumerator<'a> {
    a: &'a SquareMatrix,
    used: Vec<bool>,
    // head of the open chain whose tail is i / tail of the chain whose head is j
    head_of_tail: Vec<usize>,
    tail_of_head: Vec<usize>,
    buckets: Vec<CompensatedSum>,
}

impl CycleEnumerator<'_> {
    fn run(&mut self, row: usize, cycles: usize, prod: f64) {
        let n = self.a.n();
        if row + 1 == n {
            // one free column left; it always closes the open chain through `row`
            let col = self.used.iter().position(|u| !u).unwrap_or(row);
            let v = self.a.get(row, col);
            if v != 0.0 {
                debug_assert_eq!(self.head_of_tail[row], col);
                self.buckets[cycles + 1].add(prod * v);
            }
            return;
        }
        for col in 0..n {
            if self.used[col] {
                continue;
            }
            let v = self.a.get(row, col);
            if v == 0.0 {
                continue;
            }
            let h = self.head_of_tail[row];
            self.used[col] = true;
            if h == col {
                self.run(row + 1, cycles + 1, prod * v);
            } else {
                let t = self.tail_of_head[col];
                let (old_h, old_t) = (self.head_of_tail[t], self.tail_of_head[h]);
                self.head_of_tail[t] = h;
                self.tail_of_head[h] = t;
                self.run(row + 1, cycles, prod * v);
                self.head_of_tail[t] = old_h;
                self.tail_of_head[h] = old_t;
            }
            self.used[col] = false;
        }
    }
}

impl ExactEngine {
    pub fn with_cap(cap: usize) -> Self {
        ExactEngine { cap }
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.cap {
            Err(Error::ExactSizeLimit { n, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// Coefficients `c[m] = sum over permutations with m cycles of prod A[i, s(i)]`,
    /// so that `per_alpha(A) = sum_m c[m] alpha^m`.
    pub fn cycle_polynomial(&self, a: &SquareMatrix) -> Result<Vec<f64>> {
        let n = a.n();
        self.check(n)?;
        if n == 0 {
            return Ok(vec![1.0]);
        }
        let mut e = CycleEnumerator {
            a,
            used: vec![false; n],
            head_of_tail: (0..n).collect(),
            tail_of_head: (0..n).collect(),
            buckets: vec![CompensatedSum::default(); n + 1],
        };
        e.run(0, 0, 1.0);
        Ok(e.buckets.iter().map(CompensatedSum::value).collect())
    }

    /// `sum over permutations s of alpha^{#cycles(s)} prod_i A[i, s(i)]`.
    pub fn per_alpha(&self, a: &SquareMatrix, alpha: f64) -> Result<f64> {
        let coeffs = self.cycle_polynomial(a)?;
        let mut acc = CompensatedSum::default();
        let mut pow = 1.0;
        for c in coeffs {
            acc.add(c * pow);
            pow *= alpha;
        }
        Ok(acc.value())
    }

    /// Sum of cyclic products: the single-cycle permutations only.
    pub fn cyp(&self, a: &SquareMatrix) -> Result<f64> {
        let n = a.n();
        if n == 0 {
            return Err(Error::EmptyCyclicProduct);
        }
        self.check(n)?;
        if n == 1 {
            return Ok(a.get(0, 0));
        }
        fn walk(
            a: &SquareMatrix,
            cur: usize,
            depth: usize,
            prod: f64,
            visited: &mut [bool],
            acc: &mut CompensatedSum,
        ) {
            let n = a.n();
            if depth == n {
                acc.add(prod * a.get(cur, 0));
                return;
            }
            for next in 1..n {
                if visited[next] {
                    continue;
                }
                let v = a.get(cur, next);
                if v == 0.0 {
                    continue;
                }
                visited[next] = true;
                walk(a, next, depth + 1, prod * v, visited, acc);
                visited[next] = false;
            }
        }
        let mut visited = vec![false; n];
        visited[0] = true;
        let mut acc = CompensatedSum::default();
        walk(a, 0, 1, 1.0, &mut visited, &mut acc);
        Ok(acc.value())
    }

    /// `per_alpha(K(x + t)) / per_alpha(K(x))` from the Gram matrix of `x` and
    /// the query column of `t`.
    pub fn ratio(&self, gram: &SquareMatrix, query: &QueryColumn, alpha: f64) -> Result<f64> {
        self.check(gram.n() + 1)?;
        let full = gram.bordered(query)?;
        let num = self.per_alpha(&full, alpha)?;
        let den = self.per_alpha(gram, alpha)?;
        if den == 0.0 {
            return Err(Error::Degenerate(
                "alpha-permanent of the training Gram matrix is zero".into(),
            ));
        }
        Ok(num / den)
    }

    /// `cyp(K(x + t)) / cyp(K(x))`.
    pub fn cyclic_ratio(&self, gram: &SquareMatrix, query: &QueryColumn) -> Result<f64> {
        if gram.is_empty() {
            return Err(Error::EmptyCyclicProduct);
        }
        self.check(gram.n() + 1)?;
        let full = gram.bordered(query)?;
        let den = self.cyp(gram)?;
        if den == 0.0 {
            return Err(Error::Degenerate(
                "cyclic product sum of the training Gram matrix is zero".into(),
            ));
        }
        Ok(self.cyp(&full)? / den)
    }

    /// Probability of the label vector `labels` given the points, for classes
    /// with shape parameters `alphas`. Empty classes contribute a factor 1.
    pub fn label_probability(
        &self,
        k: &SquareMatrix,
        labels: &[usize],
        alphas: &[f64],
    ) -> Result<f64> {
        if labels.len() != k.n() {
            return Err(Error::DimensionMismatch {
                expected: k.n(),
                got: labels.len(),
            });
        }
        self.check(k.n())?;
        let mut num = 1.0;
        for (r, &a) in alphas.iter().enumerate() {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == r).collect();
            num *= self.per_alpha(&k.submatrix(&idx), a)?;
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= alphas.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} has no alpha ({} classes)",
                alphas.len()
            )));
        }
        let total: f64 = alphas.iter().sum();
        Ok(num / self.per_alpha(k, total)?)
    }

    /// `lambda^{#B} prod_b cyp(K(x_b)) / per_lambda(K(x))`.
    pub fn partition_probability(
        &self,
        k: &SquareMatrix,
        partition: &Partition,
        lambda: f64,
    ) -> Result<f64> {
        if partition.n() != k.n() {
            return Err(Error::DimensionMismatch {
                expected: k.n(),
                got: partition.n(),
            });
        }
        self.check(k.n())?;
        let mut num = lambda.powi(partition.block_count() as i32);
        for b in partition.blocks() {
            num *= self.cyp(&k.submatrix(b))?;
        }
        Ok(num / self.per_alpha(k, lambda)?)
    }
}

pub fn per_alpha_exact(a: &SquareMatrix, alpha: f64) -> Result<f64> {
    ExactEngine::default().per_alpha(a, alpha)
}

pub fn cyp_exact(a: &SquareMatrix) -> Result<f64> {
    ExactEngine::default().cyp(a)
}

fn with_query(t: &[f64], x: &[Point], kernel: &Kernel) -> Result<(SquareMatrix, QueryColumn)> {
    let g = gram(kernel, x)?;
    let q = g.query_column(t)?;
    Ok((g.entries().clone(), q))
}

/// Exact permanental ratio `R_n(t; x)`.
pub fn ratio_exact(t: &[f64], x: &[Point], kernel: &Kernel, alpha: f64) -> Result<f64> {
    let engine = ExactEngine::default();
    engine.check(x.len() + 1)?;
    let (g, q) = with_query(t, x, kernel)?;
    engine.ratio(&g, &q, alpha)
}

/// Exact cyclic ratio `C_n(t; x)`; undefined for empty `x`.
pub fn cyclic_ratio_exact(t: &[f64], x: &[Point], kernel: &Kernel) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyCyclicProduct);
    }
    let engine = ExactEngine::default();
    engine.check(x.len() + 1)?;
    let (g, q) = with_query(t, x, kernel)?;
    engine.cyclic_ratio(&g, &q)
}

pub fn label_probability_exact(
    x: &[Point],
    labels: &[usize],
    alphas: &[f64],
    kernel: &Kernel,
) -> Result<f64> {
    let engine = ExactEngine::default();
    engine.check(x.len())?;
    let g = gram(kernel, x)?;
    engine.label_probability(g.entries(), labels, alphas)
}

pub fn partition_probability_exact(
    x: &[Point],
    partition: &Partition,
    lambda: f64,
    kernel: &Kernel,
) -> Result<f64> {
    let engine = ExactEngine::default();
    engine.check(x.len())?;
    let g = gram(kernel, x)?;
    engine.partition_probability(g.entries(), partition, lambda)
}
