//! k-fold cross-validation over kernel family, length scale and alpha.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{fit, LabeledDataset, Method, ModelParams, PosteriorRow};
use crate::datasets::rng_from_seed;
use crate::error::{Error, Result};
use crate::kernel::{median_pairwise_distance, Kernel};

/// Probabilities below this are raised to it before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ErrorRate,
    CrossEntropy,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::ErrorRate => "error_rate",
            Objective::CrossEntropy => "cross_entropy",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" | "error_rate" => Ok(Objective::ErrorRate),
            "xent" | "cross_entropy" => Ok(Objective::CrossEntropy),
            _ => Err(Error::InvalidParameter(format!("unknown objective {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVSpec {
    pub folds: usize,
    pub grid: Vec<ModelParams>,
    pub objective: Objective,
    pub seed: u64,
    #[serde(default)]
    pub stratified: bool,
}

impl CVSpec {
    pub fn new(grid: Vec<ModelParams>, objective: Objective, seed: u64) -> Self {
        CVSpec {
            folds: 10,
            grid,
            objective,
            seed,
            stratified: false,
        }
    }
}

/// Mean of `-ln p(true class)`, with `p` floored at [`PROBABILITY_FLOOR`].
pub fn cross_entropy(posteriors: &[PosteriorRow], truth: &[usize]) -> f64 {
    if posteriors.is_empty() {
        return 0.0;
    }
    let total: f64 = posteriors
        .iter()
        .zip(truth)
        .map(|(row, &y)| -row.probs[y].max(PROBABILITY_FLOOR).ln())
        .sum();
    total / posteriors.len() as f64
}

pub fn error_rate(posteriors: &[PosteriorRow], truth: &[usize]) -> f64 {
    if posteriors.is_empty() {
        return 0.0;
    }
    let wrong = posteriors.iter().zip(truth).filter(|(r, &y)| r.label != y).count();
    wrong as f64 / posteriors.len() as f64
}

/// Fold index of every item: a seeded shuffle dealt round-robin into `folds`
/// groups. With `stratify_by`, each class is shuffled and dealt in turn so
/// every fold gets a near-equal share of each class.
pub fn fold_assignment(
    n: usize,
    folds: usize,
    seed: u64,
    stratify_by: Option<&[usize]>,
) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let order: Vec<usize> = match stratify_by {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        }
        Some(labels) => {
            let k = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut out = Vec::with_capacity(n);
            for r in 0..k {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == r).collect();
                idx.shuffle(&mut rng);
                out.extend(idx);
            }
            out
        }
    };
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub params: ModelParams,
    pub fold_scores: Vec<f64>,
    /// `None` when any fold failed to evaluate.
    pub mean: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub objective: Objective,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub candidates: Vec<CandidateReport>,
    pub winner: Option<usize>,
}

impl CVReport {
    pub fn winner_params(&self) -> Option<&ModelParams> {
        self.winner.map(|w| &self.candidates[w].params)
    }
}

fn tie_key(p: &ModelParams) -> (f64, f64) {
    (p.kernel.tau().unwrap_or(f64::INFINITY), p.alpha_for(0).get())
}

pub fn cross_validate(data: &LabeledDataset, spec: &CVSpec) -> Result<CVReport> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidParameter("empty candidate grid".into()));
    }
    if spec.folds < 2 || data.len() < spec.folds {
        return Err(Error::InvalidParameter(format!(
            "{} folds for {} items",
            spec.folds,
            data.len()
        )));
    }
    let fold_of = fold_assignment(
        data.len(),
        spec.folds,
        spec.seed,
        spec.stratified.then_some(&data.labels[..]),
    );
    let split = |f: usize| {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&i| fold_of[i] == f);
        (data.subset(&train), data.subset(&test))
    };
    let folds: Vec<_> = (0..spec.folds).map(split).collect();

    let jobs: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|c| (0..spec.folds).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train, test) = &folds[f];
            let model = fit(train, &spec.grid[c])?;
            let post = model.predict_many(&test.points)?;
            Ok(match spec.objective {
                Objective::ErrorRate => error_rate(&post, &test.labels),
                Objective::CrossEntropy => cross_entropy(&post, &test.labels),
            })
        })
        .collect();

    let mut candidates = Vec::with_capacity(spec.grid.len());
    let mut it = scores.into_iter();
    for params in &spec.grid {
        let mut fold_scores = Vec::with_capacity(spec.folds);
        let mut error = None;
        for _ in 0..spec.folds {
            match it.next().expect("one score per job") {
                Ok(s) => fold_scores.push(s),
                Err(e) => {
                    fold_scores.push(f64::NAN);
                    error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let mean = error
            .is_none()
            .then(|| fold_scores.iter().sum::<f64>() / spec.folds as f64);
        candidates.push(CandidateReport {
            params: params.clone(),
            fold_scores,
            mean,
            error,
        });
    }

    let winner = (0..candidates.len())
        .filter(|&c| candidates[c].mean.is_some())
        .min_by(|&a, &b| {
            let (ma, mb) = (candidates[a].mean.unwrap(), candidates[b].mean.unwrap());
            let (ta, aa) = tie_key(&candidates[a].params);
            let (tb, ab) = tie_key(&candidates[b].params);
            ma.total_cmp(&mb)
                .then(ta.total_cmp(&tb))
                .then(aa.total_cmp(&ab))
        });
    Ok(CVReport {
        objective: spec.objective,
        folds: spec.folds,
        seed: spec.seed,
        stratified: spec.stratified,
        candidates,
        winner,
    })
}

/// Every combination of `families` (taking their length scales from `taus`),
/// `alphas`, with the given evaluation method.
pub fn grid(families: &[Kernel], taus: &[f64], alphas: &[f64], method: Method) -> Result<Vec<ModelParams>> {
    let mut out = Vec::new();
    for fam in families {
        let ts: Vec<f64> = if fam.tau().is_some() { taus.to_vec() } else { vec![f64::NAN] };
        for &tau in &ts {
            let kernel = if tau.is_nan() { fam.clone() } else { fam.with_tau(tau) };
            for &a in alphas {
                out.push(ModelParams::new(kernel.clone(), a, method)?);
            }
        }
    }
    Ok(out)
}

/// Scale-aware default grid: tau in {1/4, 1/2, 1, 2, 4} times the median
/// pairwise distance, alpha in {1/4, 1/2, 1, 2, 4}.
pub fn default_grid(data: &LabeledDataset, families: &[Kernel], method: Method) -> Result<Vec<ModelParams>> {
    let scale = median_pairwise_distance(&data.points);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mults = [0.25, 0.5, 1.0, 2.0, 4.0];
    let taus: Vec<f64> = mults.iter().map(|m| m * scale).collect();
    grid(families, &taus, &mults, method)
}
