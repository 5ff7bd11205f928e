//! End-to-end experiment pipelines: the chequerboard table, the triangular
//! accuracy figure, and the expression-data error curves. Each returns a
//! serializable report plus CSV renderings; writing files is left to callers.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{accuracy_study, AccuracyConfig, AccuracyReport};
use crate::classifier::{fit, LabeledDataset, Method, ModelParams};
use crate::cyclic::ApproxOrder;
use crate::datasets::{
    derive_seed, gen_chequerboard, gen_expression, gen_grid_testset, make_splits, projection_2d,
    rank_genes_bw_on, standardize, ExpressionMatrix, SplitPlan, SyntheticExpression,
};
use crate::error::{Error, Result};
use crate::kernel::{median_pairwise_distance, squared_euclidean, Kernel, Point};
use crate::model_select::{cross_validate, grid, CVReport, CVSpec, Objective};

/// Majority vote among the `k` nearest training points (Euclidean). Distance
/// ties go to the earlier training point, vote ties to the lower class index.
pub fn knn_predict(train: &LabeledDataset, queries: &[Point], k: usize) -> Result<Vec<usize>> {
    if k == 0 || train.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "kNN needs k >= 1 and a nonempty training set (k = {k}, n = {})",
            train.len()
        )));
    }
    let k = k.min(train.len());
    Ok(queries
        .par_iter()
        .map(|q| {
            let mut d: Vec<(f64, usize)> = train
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (squared_euclidean(p, q), i))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; train.n_classes()];
            for &(_, i) in &d[..k] {
                votes[train.labels[i]] += 1;
            }
            let best = *votes.iter().max().unwrap_or(&0);
            votes.iter().position(|&v| v == best).unwrap_or(0)
        })
        .collect())
}

fn count_errors(pred: &[usize], truth: &[usize]) -> usize {
    pred.iter().zip(truth).filter(|(p, t)| p != t).count()
}

fn permanental_errors(data: &LabeledDataset, params: &ModelParams, test: &LabeledDataset) -> Result<(usize, usize)> {
    let model = fit(data, params)?;
    let train = model.predict_many(&data.points)?;
    let held = model.predict_many(&test.points)?;
    let labels = |rows: &[crate::classifier::PosteriorRow]| rows.iter().map(|r| r.label).collect::<Vec<_>>();
    Ok((
        count_errors(&labels(&train), &data.labels),
        count_errors(&labels(&held), &test.labels),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub seed: u64,
    pub per_cell: usize,
    pub grid_resolution: usize,
    pub taus: Vec<f64>,
    pub alphas: Vec<f64>,
    pub folds: usize,
    pub objective: Objective,
    pub order: ApproxOrder,
    pub knn_k: usize,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            seed: 1,
            per_cell: 10,
            grid_resolution: 60,
            taus: vec![0.25, 0.5, 1.0, 2.0],
            alphas: vec![0.5, 1.0, 2.0],
            folds: 10,
            objective: Objective::CrossEntropy,
            order: ApproxOrder::FOUR_CYCLE,
            knn_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub method: String,
    pub train_errors: Option<usize>,
    pub test_errors: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    /// Chosen parameters, or "external" for classifiers outside this crate.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub config: Table1Config,
    pub rows: Vec<Table1Row>,
    /// Cross-validation over both kernel families together.
    pub cv: CVReport,
}

impl Table1Report {
    pub fn row(&self, method: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Family chosen by the joint cross-validation.
    pub fn selected_family(&self) -> Option<&'static str> {
        self.cv.winner_params().map(|p| p.kernel.family())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,train_errors,n_train,test_errors,n_test,note\n");
        let opt = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.method,
                opt(r.train_errors),
                r.n_train,
                opt(r.test_errors),
                r.n_test,
                r.note
            );
        }
        s
    }
}

pub const TABLE1_K1: &str = "permanental K1";
pub const TABLE1_K2: &str = "permanental K2";
pub const TABLE1_KNN: &str = "kNN";

/// Chequerboard experiment: cross-validate (tau, alpha) per kernel family,
/// refit, count training and grid errors, and add the kNN baseline.
pub fn run_table1(config: &Table1Config) -> Result<Table1Report> {
    let data = gen_chequerboard(config.per_cell, derive_seed(config.seed, 0));
    let test = gen_grid_testset(config.grid_resolution)?;
    let method = Method::Approx(config.order);
    let families = [Kernel::exponential(1.0), Kernel::gaussian(1.0)];
    let cv_seed = derive_seed(config.seed, 1);
    let cv_for = |fams: &[Kernel]| -> Result<CVReport> {
        let candidates = grid(fams, &config.taus, &config.alphas, method)?;
        let mut spec = CVSpec::new(candidates, config.objective, cv_seed);
        spec.folds = config.folds;
        cross_validate(&data, &spec)
    };

    let mut rows = Vec::new();
    for (name, fam) in [(TABLE1_K1, &families[0]), (TABLE1_K2, &families[1])] {
        let report = cv_for(std::slice::from_ref(fam))?;
        let params = report
            .winner_params()
            .ok_or_else(|| Error::Degenerate(format!("no valid candidate for {name}")))?
            .clone();
        let (train_errors, test_errors) = permanental_errors(&data, &params, &test)?;
        rows.push(Table1Row {
            method: name.to_string(),
            train_errors: Some(train_errors),
            test_errors: Some(test_errors),
            n_train: data.len(),
            n_test: test.len(),
            note: format!(
                "tau={} alpha={}",
                params.kernel.tau().unwrap_or(f64::NAN),
                params.alpha_for(0).get()
            ),
        });
    }

    let knn_train = knn_predict(&data, &data.points, config.knn_k)?;
    let knn_test = knn_predict(&data, &test.points, config.knn_k)?;
    rows.push(Table1Row {
        method: TABLE1_KNN.to_string(),
        train_errors: Some(count_errors(&knn_train, &data.labels)),
        test_errors: Some(count_errors(&knn_test, &test.labels)),
        n_train: data.len(),
        n_test: test.len(),
        note: format!("k={}", config.knn_k),
    });
    for name in ["neural network", "support vector machine", "bagged classification trees"] {
        rows.push(Table1Row {
            method: name.to_string(),
            train_errors: None,
            test_errors: None,
            n_train: data.len(),
            n_test: test.len(),
            note: "external".to_string(),
        });
    }

    let cv = cv_for(&families)?;
    Ok(Table1Report {
        config: config.clone(),
        rows,
        cv,
    })
}

/// The triangular accuracy study, with CSV renderings of its curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Report {
    pub study: AccuracyReport,
}

impl Figure1Report {
    pub fn ratios_csv(&self) -> String {
        let mut s = String::from("t,r0,r1,r2,r3\n");
        for c in &self.study.curves {
            let [a, b, c2, d] = c.ratios;
            let _ = writeln!(s, "{},{a},{b},{c2},{d}", c.t);
        }
        s
    }

    /// Probability curves for both two-class setups, long format.
    pub fn probabilities_csv(&self) -> String {
        let mut s = String::from("setup,t,p1_order1,p1_order2,p1_order3\n");
        for (name, pc) in [("separated", &self.study.separated), ("overlapped", &self.study.overlapped)] {
            for (i, t) in pc.t.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{name},{t},{},{},{}",
                    pc.p_class1[0][i], pc.p_class1[1][i], pc.p_class1[2][i]
                );
            }
        }
        s
    }
}

pub fn run_figure1(config: &AccuracyConfig) -> Result<Figure1Report> {
    Ok(Figure1Report {
        study: accuracy_study(config)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroarrayConfig {
    pub expression: SyntheticExpression,
    pub plan: SplitPlan,
    pub gene_counts: Vec<usize>,
    /// Kernel families to evaluate; `tau` is replaced per split by the median
    /// pairwise distance of the standardized training features.
    pub families: Vec<Kernel>,
    pub alpha: f64,
    pub order: ApproxOrder,
    pub knn_k: usize,
    /// Genes used for the two-dimensional display.
    pub projection_genes: usize,
}

impl Default for MicroarrayConfig {
    fn default() -> Self {
        MicroarrayConfig {
            expression: SyntheticExpression::default(),
            plan: SplitPlan::default(),
            gene_counts: vec![1, 2, 3, 5, 10, 20, 50, 100, 200],
            families: vec![Kernel::exponential(1.0), Kernel::gaussian(1.0)],
            alpha: 1.0,
            order: ApproxOrder::FOUR_CYCLE,
            knn_k: 5,
            projection_genes: 40,
        }
    }
}

impl MicroarrayConfig {
    /// Same configuration with every seed derived from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.expression.seed = derive_seed(seed, 0);
        self.plan.seed = derive_seed(seed, 1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroarrayCurve {
    pub method: String,
    /// Mean test errors per split, aligned with `gene_counts`.
    pub mean_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroarrayReport {
    pub config: MicroarrayConfig,
    pub gene_counts: Vec<usize>,
    pub curves: Vec<MicroarrayCurve>,
    /// Planted genes, when the data came from the generator.
    pub informative: Vec<usize>,
    /// `(x, y, label)` display coordinates over the top-ranked genes of the full data.
    pub projection: Vec<(f64, f64, usize)>,
}

impl MicroarrayReport {
    fn mean_at(&self, curve: usize, genes: usize) -> Option<f64> {
        let i = self.gene_counts.iter().position(|&g| g == genes)?;
        self.curves.get(curve).map(|c| c.mean_errors[i])
    }

    /// Mean errors at 5 genes below those at 1 and at 200 genes, for the first
    /// permanental curve. `None` if those counts were not evaluated.
    pub fn is_u_shaped(&self) -> Option<bool> {
        let (one, five, many) = (self.mean_at(0, 1)?, self.mean_at(0, 5)?, self.mean_at(0, 200)?);
        Some(five < one && five < many)
    }

    pub fn errors_csv(&self) -> String {
        let mut s = String::from("genes");
        for c in &self.curves {
            let _ = write!(s, ",{}", c.method);
        }
        s.push('\n');
        for (i, g) in self.gene_counts.iter().enumerate() {
            let _ = write!(s, "{g}");
            for c in &self.curves {
                let _ = write!(s, ",{}", c.mean_errors[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn projection_csv(&self) -> String {
        let mut s = String::from("x,y,label\n");
        for (x, y, l) in &self.projection {
            let _ = writeln!(s, "{x},{y},{l}");
        }
        s
    }
}

fn split_errors(
    expr: &ExpressionMatrix,
    train: &[usize],
    test: &[usize],
    config: &MicroarrayConfig,
) -> Result<Vec<Vec<usize>>> {
    let ranking = rank_genes_bw_on(expr, train)?;
    let method = Method::Approx(config.order);
    let n_methods = config.families.len() + 1;
    let mut out = vec![Vec::with_capacity(config.gene_counts.len()); n_methods];
    for &m in &config.gene_counts {
        let genes: Vec<usize> = ranking.iter().take(m).map(|g| g.index).collect();
        let mut tr = expr.labeled(&genes, train);
        let mut te = expr.labeled(&genes, test);
        standardize(&mut tr.points, &mut te.points);
        let tau = median_pairwise_distance(&tr.points);
        let tau = if tau > 0.0 { tau } else { 1.0 };
        for (f, fam) in config.families.iter().enumerate() {
            let params = ModelParams::new(fam.with_tau(tau), config.alpha, method)?;
            let model = fit(&tr, &params)?;
            let pred: Vec<usize> = te
                .points
                .iter()
                .map(|t| model.predict(t).map(|r| r.label))
                .collect::<Result<_>>()?;
            out[f].push(count_errors(&pred, &te.labels));
        }
        let knn = knn_predict(&tr, &te.points, config.knn_k)?;
        out[n_methods - 1].push(count_errors(&knn, &te.labels));
    }
    Ok(out)
}

/// Mean test errors against the number of selected genes over random splits.
/// Genes are ranked by BSS/WSS inside each training set and features are
/// standardized with training statistics only.
pub fn run_microarray_on(
    expr: &ExpressionMatrix,
    informative: Vec<usize>,
    config: &MicroarrayConfig,
) -> Result<MicroarrayReport> {
    let mut plan = config.plan.clone();
    if plan.train_size + plan.test_size != expr.n_samples() {
        // keep the 2:1 proportion for data of another size
        plan.train_size = expr.n_samples() * 2 / 3;
        plan.test_size = expr.n_samples() - plan.train_size;
    }
    let splits = make_splits(expr.n_samples(), &plan)?;
    let per_split = splits
        .par_iter()
        .map(|s| split_errors(expr, &s.train, &s.test, config))
        .collect::<Result<Vec<_>>>()?;
    let mut names: Vec<String> = config
        .families
        .iter()
        .map(|f| format!("permanental_{}", f.family()))
        .collect();
    names.push(format!("knn{}", config.knn_k));
    let reps = per_split.len().max(1) as f64;
    let curves = names
        .into_iter()
        .enumerate()
        .map(|(m, method)| MicroarrayCurve {
            method,
            mean_errors: (0..config.gene_counts.len())
                .map(|g| per_split.iter().map(|s| s[m][g] as f64).sum::<f64>() / reps)
                .collect(),
        })
        .collect();

    let all: Vec<usize> = (0..expr.n_samples()).collect();
    let top: Vec<usize> = rank_genes_bw_on(expr, &all)?
        .iter()
        .take(config.projection_genes)
        .map(|g| g.index)
        .collect();
    let mut pts = expr.features(&top, &all);
    standardize(&mut pts, &mut []);
    let projection = projection_2d(&pts, &expr.sample_labels)
        .into_iter()
        .zip(&expr.sample_labels)
        .map(|((x, y), &l)| (x, y, l))
        .collect();

    Ok(MicroarrayReport {
        config: config.clone(),
        gene_counts: config.gene_counts.clone(),
        curves,
        informative,
        projection,
    })
}

/// The expression pipeline on data from the synthetic generator.
pub fn run_microarray(config: &MicroarrayConfig) -> Result<MicroarrayReport> {
    let (expr, informative) = gen_expression(&config.expression)?;
    run_microarray_on(&expr, informative, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_votes_and_ties() {
        let data = LabeledDataset::with_numbered_classes(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        assert_eq!(knn_predict(&data, &[vec![0.4], vec![10.6]], 1).unwrap(), vec![0, 1]);
        // two votes each: lower class wins
        assert_eq!(knn_predict(&data, &[vec![5.5]], 4).unwrap(), vec![0]);
        assert!(knn_predict(&data, &[vec![0.0]], 0).is_err());
    }

    #[test]
    fn table1_has_six_rows() {
        let cfg = Table1Config {
            per_cell: 2,
            grid_resolution: 6,
            taus: vec![0.5],
            alphas: vec![1.0],
            folds: 3,
            ..Default::default()
        };
        let r = run_table1(&cfg).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.rows.iter().filter(|r| r.note == "external").count(), 3);
        assert!(r.to_csv().lines().count() == 7);
    }

    #[test]
    fn small_microarray_runs() {
        let cfg = MicroarrayConfig {
            expression: SyntheticExpression {
                genes: 30,
                class_sizes: vec![8, 7],
                ..Default::default()
            },
            plan: SplitPlan {
                repetitions: 3,
                train_size: 10,
                test_size: 5,
                seed: 0,
            },
            gene_counts: vec![1, 5, 20],
            projection_genes: 5,
            ..Default::default()
        };
        let r = run_microarray(&cfg).unwrap();
        assert_eq!(r.curves.len(), 3);
        assert_eq!(r.projection.len(), 15);
        assert!(r.is_u_shaped().is_none());
    }
}
