//! Timing and accuracy harnesses for the cyclic approximations.

use std::f64::consts::PI;
use std::hint::black_box;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{fit, LabeledDataset, Method, ModelParams};
use crate::cyclic::{build_ratio_table, ApproxOrder};
use crate::datasets::{derive_seed, gen_triangular, rng_from_seed};
use crate::error::Result;
use crate::kernel::{gram, Kernel, Point};
use crate::permanent::{Alpha, ExactEngine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub orders: Vec<u8>,
    pub kernel: Kernel,
    pub alpha: f64,
    pub seed: u64,
    pub queries: usize,
    pub repeats: usize,
    /// Minimum wall time of one timed batch; the batch is repeated until it
    /// takes at least this long.
    pub min_batch_secs: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![100, 200, 400, 800],
            orders: vec![0, 1, 2, 3],
            kernel: Kernel::gaussian(1.0),
            alpha: 1.0,
            seed: 0,
            queries: 20,
            repeats: 5,
            min_batch_secs: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub order: u8,
    pub table_secs: f64,
    pub median_query_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log(query time) against log(n), per order.
    pub slopes: Vec<(u8, f64)>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn uniform_points(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Point> {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| vec![rng.gen_range(lo..hi)]).collect()
}

/// Median per-query wall time of `ratio_approx` for each size and order, with
/// tables built (and timed) beforehand. Training and query points are uniform
/// on `(-pi, pi)` so the Gram matrix stays dense.
pub fn bench_orders(config: &BenchConfig) -> Result<BenchReport> {
    let alpha = Alpha::new(config.alpha)?;
    let orders: Vec<ApproxOrder> = config
        .orders
        .iter()
        .map(|&k| ApproxOrder::new(k))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (s, &n) in config.sizes.iter().enumerate() {
        let x = uniform_points(n, -PI, PI, derive_seed(config.seed, 2 * s as u64));
        let queries = uniform_points(config.queries, -PI, PI, derive_seed(config.seed, 2 * s as u64 + 1));
        let g = gram(&config.kernel, &x)?;
        let start = Instant::now();
        let table = build_ratio_table(g, alpha, ApproxOrder::FOUR_CYCLE)?;
        let table_secs = start.elapsed().as_secs_f64();
        let columns = queries
            .iter()
            .map(|t| table.gram().query_column(t))
            .collect::<Result<Vec<_>>>()?;

        for &order in &orders {
            let batch = || -> Result<f64> {
                let mut acc = 0.0;
                for q in &columns {
                    acc += table.ratio_for_column(black_box(q), order)?;
                }
                Ok(acc)
            };
            black_box(batch()?);
            let start = Instant::now();
            black_box(batch()?);
            let once = start.elapsed().as_secs_f64().max(1e-9);
            let iters = ((config.min_batch_secs / once).ceil() as usize).max(1);
            let mut samples = Vec::with_capacity(config.repeats);
            for _ in 0..config.repeats.max(1) {
                let start = Instant::now();
                for _ in 0..iters {
                    black_box(batch()?);
                }
                let secs = start.elapsed().as_secs_f64();
                samples.push(secs / (iters * columns.len().max(1)) as f64);
            }
            samples.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                n,
                order: order.get(),
                table_secs,
                median_query_secs: samples[samples.len() / 2],
            });
        }
    }
    let slopes = orders
        .iter()
        .map(|o| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.order == o.get())
                .map(|r| ((r.n as f64).ln(), r.median_query_secs.ln()))
                .unzip();
            (o.get(), fit_slope(&xs, &ys))
        })
        .collect();
    Ok(BenchReport {
        config: config.clone(),
        rows,
        slopes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyConfig {
    pub n: usize,
    pub seed: u64,
    pub tau: f64,
    pub alpha: f64,
    /// Number of evaluation points on `(-pi, pi)` for the ratio curves.
    pub grid_points: usize,
    /// Half-width of the central region `|t| <= central_halfwidth`.
    pub central_halfwidth: f64,
    /// Size of the subsample compared with exact enumeration.
    pub exact_subsample: usize,
    pub exact_grid_points: usize,
    /// Centre of the second class's triangular law in the separated setup.
    pub separated_center: f64,
    /// Centre of the second class in the overlapping setup.
    pub overlapped_center: f64,
    /// Number of evaluation points on `(-pi, 3 pi)` for the probability curves.
    pub class_grid_points: usize,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        AccuracyConfig {
            n: 100,
            seed: 2012,
            tau: 1.0,
            alpha: 1.0,
            grid_points: 401,
            central_halfwidth: 0.5,
            exact_subsample: 10,
            exact_grid_points: 11,
            separated_center: 2.0 * PI,
            overlapped_center: 1.5 * PI,
            class_grid_points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurvePoint {
    pub t: f64,
    /// `R^(k)` for k = 0..=3.
    pub ratios: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub n: usize,
    pub t: Vec<f64>,
    pub exact: Vec<f64>,
    /// Mean relative error against the exact ratio for k = 1, 2, 3.
    pub mean_rel_err: [f64; 3],
    pub max_rel_err: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCurves {
    pub class2_center: f64,
    pub t: Vec<f64>,
    /// Probability of class 1 for k = 1, 2, 3.
    pub p_class1: [Vec<f64>; 3],
    /// Largest absolute difference between any two orders.
    pub max_abs_diff: f64,
    /// Largest difference from the four-cycle curve relative to it, for k = 1, 2.
    pub max_rel_diff_vs_four: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub config: AccuracyConfig,
    pub curves: Vec<RatioCurvePoint>,
    /// Mean of `R^(3) / R^(2)` over the central region.
    pub central_four_over_three: f64,
    /// Mean of `R^(2) / R^(1)` over the central region.
    pub central_three_over_two: f64,
    /// Mean over the grid of `|R^(2) - R^(1)| / R^(1)`.
    pub gap_two_three: f64,
    /// Mean over the grid of `|R^(3) - R^(2)| / R^(2)`.
    pub gap_three_four: f64,
    pub exact: ExactComparison,
    pub separated: ProbabilityCurves,
    pub overlapped: ProbabilityCurves,
    pub elapsed_secs: f64,
}

fn linspace_open(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / m as f64)
        .collect()
}

fn probability_curves(
    class1: &[Point],
    config: &AccuracyConfig,
    center: f64,
    seed: u64,
) -> Result<ProbabilityCurves> {
    let class2 = gen_triangular(config.n, center, PI, seed)?;
    let points: Vec<Point> = class1.iter().chain(&class2).cloned().collect();
    let labels = (0..points.len()).map(|i| usize::from(i >= class1.len())).collect();
    let data = LabeledDataset::with_numbered_classes(points, labels, 2)?;
    let ts = linspace_open(-PI, 3.0 * PI, config.class_grid_points);
    let mut curves: [Vec<f64>; 3] = Default::default();
    for k in 1..=3u8 {
        let params = ModelParams::new(
            Kernel::gaussian(config.tau),
            config.alpha,
            Method::Approx(ApproxOrder::new(k)?),
        )?;
        let model = fit(&data, &params)?;
        curves[k as usize - 1] = ts
            .par_iter()
            .map(|&t| model.predict(&[t]).map(|r| r.probs[0]))
            .collect::<Result<_>>()?;
    }
    let mut max_abs_diff = 0.0f64;
    let mut max_rel = [0.0f64; 2];
    for i in 0..ts.len() {
        for a in 0..3 {
            for b in a + 1..3 {
                max_abs_diff = max_abs_diff.max((curves[a][i] - curves[b][i]).abs());
            }
        }
        for a in 0..2 {
            let four = curves[2][i];
            max_rel[a] = max_rel[a].max((curves[a][i] - four).abs() / four);
        }
    }
    Ok(ProbabilityCurves {
        class2_center: center,
        t: ts,
        p_class1: curves,
        max_abs_diff,
        max_rel_diff_vs_four: max_rel,
    })
}

/// Ratio curves of every order for a triangular sample on `(-pi, pi)`, the
/// gaps between successive orders, a comparison with exact enumeration on a
/// subsample, and two-class probability curves.
pub fn accuracy_study(config: &AccuracyConfig) -> Result<AccuracyReport> {
    let start = Instant::now();
    let alpha = Alpha::new(config.alpha)?;
    let kernel = Kernel::gaussian(config.tau);
    let x = gen_triangular(config.n, 0.0, PI, derive_seed(config.seed, 0))?;
    let table = build_ratio_table(gram(&kernel, &x)?, alpha, ApproxOrder::FOUR_CYCLE)?;
    let ts = linspace_open(-PI, PI, config.grid_points);
    let curves = ts
        .par_iter()
        .map(|&t| {
            let q = table.gram().query_column(&[t])?;
            let mut ratios = [0.0; 4];
            for k in ApproxOrder::all() {
                ratios[k.get() as usize] = table.ratio_for_column(&q, k)?;
            }
            Ok(RatioCurvePoint { t, ratios })
        })
        .collect::<Result<Vec<_>>>()?;

    let central: Vec<&RatioCurvePoint> = curves
        .iter()
        .filter(|c| c.t.abs() <= config.central_halfwidth)
        .collect();
    let mean = |f: &dyn Fn(&RatioCurvePoint) -> f64, pts: &[&RatioCurvePoint]| {
        pts.iter().map(|c| f(c)).sum::<f64>() / pts.len() as f64
    };
    let all: Vec<&RatioCurvePoint> = curves.iter().collect();
    let central_four_over_three = mean(&|c| c.ratios[3] / c.ratios[2], &central);
    let central_three_over_two = mean(&|c| c.ratios[2] / c.ratios[1], &central);
    let gap_two_three = mean(&|c| (c.ratios[2] - c.ratios[1]).abs() / c.ratios[1], &all);
    let gap_three_four = mean(&|c| (c.ratios[3] - c.ratios[2]).abs() / c.ratios[2], &all);

    let sub: Vec<Point> = x[..config.exact_subsample.min(x.len())].to_vec();
    let sub_table = build_ratio_table(gram(&kernel, &sub)?, alpha, ApproxOrder::FOUR_CYCLE)?;
    let engine = ExactEngine::default();
    let ets = linspace_open(-PI, PI, config.exact_grid_points);
    let rows = ets
        .par_iter()
        .map(|&t| {
            let q = sub_table.gram().query_column(&[t])?;
            let exact = engine.ratio(sub_table.gram().entries(), &q, config.alpha)?;
            let mut approx = [0.0; 3];
            for k in 1..=3u8 {
                approx[k as usize - 1] = sub_table.ratio_for_column(&q, ApproxOrder::new(k)?)?;
            }
            Ok((exact, approx))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean_rel_err = [0.0; 3];
    let mut max_rel_err = [0.0f64; 3];
    for (exact, approx) in &rows {
        for k in 0..3 {
            let e = (approx[k] - exact).abs() / exact;
            mean_rel_err[k] += e / rows.len() as f64;
            max_rel_err[k] = max_rel_err[k].max(e);
        }
    }
    let exact = ExactComparison {
        n: sub.len(),
        t: ets,
        exact: rows.iter().map(|r| r.0).collect(),
        mean_rel_err,
        max_rel_err,
    };

    let separated = probability_curves(&x, config, config.separated_center, derive_seed(config.seed, 1))?;
    let overlapped = probability_curves(&x, config, config.overlapped_center, derive_seed(config.seed, 2))?;

    Ok(AccuracyReport {
        config: config.clone(),
        curves,
        central_four_over_three,
        central_three_over_two,
        gap_two_three,
        gap_three_four,
        exact,
        separated,
        overlapped,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}
