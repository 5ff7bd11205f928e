//! Permanental classifiers.
//!
//! With finitely many classes, a query `t` is assigned to class `r` with
//! probability proportional to the permanental ratio of `t` against the class's
//! training points, or to `alpha_r K(t, t)` when the class has no training
//! points yet. With an open-ended set of classes, the weight for an existing
//! block is the cyclic ratio and a new block gets `lambda K(t, t)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cyclic::{build_ratio_table, ApproxOrder, CyclicTable, RatioTable};
use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, Kernel, Point};
use crate::permanent::{Alpha, ExactEngine, Partition};

/// Feature vectors with class labels `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub points: Vec<Point>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Point>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {l} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some(first) = points.first() {
            if let Some(p) = points.iter().find(|p| p.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: p.len(),
                });
            }
        }
        Ok(LabeledDataset {
            points,
            labels,
            class_names,
        })
    }

    /// Classes named "1".."k".
    pub fn with_numbered_classes(points: Vec<Point>, labels: Vec<usize>, k: usize) -> Result<Self> {
        Self::new(points, labels, (1..=k).map(|r| r.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    /// Training points of class `r`, in dataset order.
    pub fn class_points(&self, r: usize) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == r)
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_classes()];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Rows `idx`, keeping every class (possibly empty).
    pub fn subset(&self, idx: &[usize]) -> Self {
        LabeledDataset {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// How ratios are evaluated: a cyclic approximation of some order, or exact
/// enumeration (small classes only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Approx(ApproxOrder),
    Exact,
}

impl Default for Method {
    fn default() -> Self {
        Method::Approx(ApproxOrder::FOUR_CYCLE)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Approx(k) => write!(f, "{}", k.get()),
            Method::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(Method::Exact);
        }
        let k: u8 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("unknown order {s:?}")))?;
        Ok(Method::Approx(ApproxOrder::new(k)?))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kernel: Kernel,
    /// One alpha per class, or a single value shared by all classes.
    pub alphas: Vec<Alpha>,
    /// Weight of a new block in the open-ended model.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub method: Method,
}

impl ModelParams {
    pub fn new(kernel: Kernel, alpha: f64, method: Method) -> Result<Self> {
        Ok(ModelParams {
            kernel,
            alphas: vec![Alpha::new(alpha)?],
            lambda: default_lambda(),
            method,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn alpha_for(&self, class: usize) -> Alpha {
        if self.alphas.len() == 1 {
            self.alphas[0]
        } else {
            self.alphas[class]
        }
    }

    fn validate(&self, n_classes: Option<usize>) -> Result<()> {
        self.kernel.validate()?;
        if self.alphas.is_empty() {
            return Err(Error::InvalidParameter("no alpha given".into()));
        }
        if let Some(k) = n_classes {
            if self.alphas.len() != 1 && self.alphas.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "{} alphas for {k} classes",
                    self.alphas.len()
                )));
            }
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum ClassFit {
    Approx(RatioTable),
    Exact(GramMatrix),
}

impl ClassFit {
    fn gram(&self) -> &GramMatrix {
        match self {
            ClassFit::Approx(t) => t.gram(),
            ClassFit::Exact(g) => g,
        }
    }
}

/// One posterior row: normalized probabilities, the winning index, and the
/// unnormalized weights they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub probs: Vec<f64>,
    pub label: usize,
    pub weights: Vec<f64>,
}

impl PosteriorRow {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite class weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate(
                "all class weights are zero; the kernel gives the query no support".into(),
            ));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut label = 0;
        for (r, &p) in probs.iter().enumerate() {
            if p > probs[label] {
                label = r;
            }
        }
        Ok(PosteriorRow {
            probs,
            label,
            weights,
        })
    }
}

pub type PosteriorTable = Vec<PosteriorRow>;

/// Per-class training sets with their ratio tables.
#[derive(Debug, Clone)]
pub struct FittedModel {
    params: ModelParams,
    data: LabeledDataset,
    classes: Vec<ClassFit>,
    engine: ExactEngine,
}

pub fn fit(data: &LabeledDataset, params: &ModelParams) -> Result<FittedModel> {
    params.validate(Some(data.n_classes()))?;
    let engine = ExactEngine::default();
    let classes = (0..data.n_classes())
        .map(|r| {
            let g = gram(&params.kernel, &data.class_points(r))?;
            if let Some(i) = g.first_nonpositive_diagonal() {
                return Err(Error::ZeroDiagonal { index: i });
            }
            Ok(match params.method {
                Method::Approx(order) => {
                    ClassFit::Approx(build_ratio_table(g, params.alpha_for(r), order)?)
                }
                Method::Exact => {
                    if g.len() + 1 > engine.cap {
                        return Err(Error::ExactSizeLimit {
                            n: g.len() + 1,
                            cap: engine.cap,
                        });
                    }
                    ClassFit::Exact(g)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedModel {
        params: params.clone(),
        data: data.clone(),
        classes,
        engine,
    })
}

impl FittedModel {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn data(&self) -> &LabeledDataset {
        &self.data
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.gram().len()).collect()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// The class's ratio table, when fitted with an approximation.
    pub fn ratio_table(&self, class: usize) -> Option<&RatioTable> {
        match &self.classes[class] {
            ClassFit::Approx(t) => Some(t),
            ClassFit::Exact(_) => None,
        }
    }

    /// Unnormalized class weights for `t`.
    pub fn class_weights(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.classes
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let alpha = self.params.alpha_for(r);
                let g = c.gram();
                if g.is_empty() {
                    return self.params.kernel.eval(t, t).map(|k| alpha.get() * k);
                }
                let q = g.query_column(t)?;
                match (c, self.params.method) {
                    (ClassFit::Approx(table), Method::Approx(order)) => {
                        table.ratio_for_column(&q, order)
                    }
                    _ => self.engine.ratio(g.entries(), &q, alpha.get()),
                }
            })
            .collect()
    }

    pub fn predict(&self, t: &[f64]) -> Result<PosteriorRow> {
        PosteriorRow::from_weights(self.class_weights(t)?)
    }

    pub fn predict_many(&self, queries: &[Point]) -> Result<PosteriorTable> {
        queries.par_iter().map(|t| self.predict(t)).collect()
    }

    /// Everything needed to rebuild the model; tables are recomputed on load.
    pub fn to_saved(&self) -> SavedModel {
        SavedModel {
            params: self.params.clone(),
            data: self.data.clone(),
        }
    }
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub params: ModelParams,
    pub data: LabeledDataset,
}

impl SavedModel {
    pub fn refit(&self) -> Result<FittedModel> {
        fit(&self.data, &self.params)
    }
}

pub fn predict_finite(model: &FittedModel, t: &[f64]) -> Result<PosteriorRow> {
    model.predict(t)
}

#[derive(Debug, Clone)]
enum BlockFit {
    Approx(CyclicTable),
    Exact(GramMatrix),
}

/// Existing blocks of an unlabelled partition, ready for assignment queries.
/// The last entry of every posterior row is the new-block probability.
#[derive(Debug, Clone)]
pub struct PartitionModel {
    params: ModelParams,
    blocks: Vec<BlockFit>,
    engine: ExactEngine,
}

impl PartitionModel {
    pub fn new(x: &[Point], partition: &Partition, params: &ModelParams) -> Result<Self> {
        params.validate(None)?;
        if partition.n() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: partition.n(),
            });
        }
        let mut model = PartitionModel {
            params: params.clone(),
            blocks: Vec::with_capacity(partition.block_count()),
            engine: ExactEngine::default(),
        };
        for (b, members) in partition.blocks().iter().enumerate() {
            let pts: Vec<Point> = members.iter().map(|&i| x[i].clone()).collect();
            model.blocks.push(model.fit_block(b, &pts)?);
        }
        Ok(model)
    }

    fn fit_block(&self, b: usize, pts: &[Point]) -> Result<BlockFit> {
        let g = gram(&self.params.kernel, pts)?;
        let wrap = |e: Error| Error::Degenerate(format!("block {b}: {e}"));
        match self.params.method {
            Method::Approx(order) => Ok(BlockFit::Approx(
                CyclicTable::build(g, order).map_err(wrap)?,
            )),
            Method::Exact => {
                if self.engine.cyp(g.entries()).map_err(wrap)? == 0.0 {
                    return Err(Error::Degenerate(format!(
                        "block {b}: cyclic product sum is zero"
                    )));
                }
                Ok(BlockFit::Exact(g))
            }
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Weights for every existing block followed by the new-block weight.
    pub fn weights(&self, t: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.blocks.len() + 1);
        for (b, block) in self.blocks.iter().enumerate() {
            let w = match block {
                BlockFit::Approx(table) => table.ratio(t, table.order()),
                BlockFit::Exact(g) => {
                    let q = g.query_column(t)?;
                    self.engine.cyclic_ratio(g.entries(), &q)
                }
            }
            .map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("block {b}: {msg}")),
                other => other,
            })?;
            out.push(w);
        }
        out.push(self.params.lambda * self.params.kernel.eval(t, t)?);
        Ok(out)
    }

    pub fn predict(&self, t: &[f64]) -> Result<PosteriorRow> {
        PosteriorRow::from_weights(self.weights(t)?)
    }
}

/// Block-assignment posterior for one query; the last entry is a new block.
pub fn predict_infinite(
    x: &[Point],
    partition: &Partition,
    t: &[f64],
    params: &ModelParams,
) -> Result<PosteriorRow> {
    PartitionModel::new(x, partition, params)?.predict(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignRule {
    Argmax,
    Sample(u64),
}

/// Grow a partition by assigning `points` one at a time.
pub fn sequential_partition(
    points: &[Point],
    params: &ModelParams,
    rule: AssignRule,
) -> Result<Partition> {
    params.validate(None)?;
    let mut rng = match rule {
        AssignRule::Sample(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        AssignRule::Argmax => None,
    };
    let mut model = PartitionModel {
        params: params.clone(),
        blocks: Vec::new(),
        engine: ExactEngine::default(),
    };
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, t) in points.iter().enumerate() {
        let row = model.predict(t)?;
        let choice = match rng.as_mut() {
            None => row.label,
            Some(rng) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = row.probs.len() - 1;
                for (b, p) in row.probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = b;
                        break;
                    }
                }
                pick
            }
        };
        if choice == members.len() {
            members.push(vec![i]);
            let pts = vec![t.clone()];
            model.blocks.push(model.fit_block(choice, &pts)?);
        } else {
            members[choice].push(i);
            let pts: Vec<Point> = members[choice].iter().map(|&j| points[j].clone()).collect();
            model.blocks[choice] = model.fit_block(choice, &pts)?;
        }
    }
    Partition::new(members, points.len())
}
