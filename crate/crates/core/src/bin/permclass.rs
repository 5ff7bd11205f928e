//! Command-line front end. Every artifact carries a provenance header and is
//! written through a `.partial` file that is renamed only on success.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use permclass::bench::{accuracy_study, bench_orders, AccuracyConfig, BenchConfig};
use permclass::classifier::{
    fit, sequential_partition, AssignRule, LabeledDataset, Method, ModelParams, SavedModel,
};
use permclass::config::{kernel_from_parts, threads_from_env, FlatConfig};
use permclass::cyclic::{build_ratio_table, ApproxOrder};
use permclass::datasets::{
    gen_chequerboard, gen_expression, gen_triangular, load_expression, load_features, load_matrix,
    load_points, rank_genes_bw, save_expression, write_features, SyntheticExpression,
};
use permclass::experiments::{
    run_figure1, run_microarray, run_microarray_on, run_table1, Figure1Report, MicroarrayConfig,
    Table1Config,
};
use permclass::kernel::{gram, Kernel, QueryColumn};
use permclass::model_select::{cross_validate, default_grid, CVSpec, Objective};
use permclass::output::{json_result, write_atomic, Provenance};
use permclass::permanent::{Alpha, ExactEngine};
use permclass::{Error, Result};

#[derive(Parser)]
#[command(name = "permclass", version, about = "Permanental classification tools")]
struct Cli {
    /// Flat key-value settings file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct KernelArgs {
    /// exponential (K1), gaussian (K2) or constant.
    #[arg(long = "kernel")]
    family: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// Level of the constant kernel.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PermMode {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Table1,
    Figure1,
    Microarray,
}

#[derive(Subcommand)]
enum Command {
    /// Alpha-permanent of a dense CSV matrix, and the ratio for its last index.
    Perm {
        mode: PermMode,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        order: Option<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a finite-class model and save it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// 0..3 or `exact`.
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class probabilities for each query point.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sequential assignment of points to blocks of an open-ended partition.
    Partition {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        order: Option<String>,
        /// Sample assignments with this seed instead of taking the argmax.
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-fold cross-validation over a parameter grid.
    Cv {
        #[arg(long)]
        data: PathBuf,
        /// CSV with columns family,tau,alpha (and optionally c); default is a
        /// scale-aware grid over both kernel families.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        /// error or xent.
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stratified: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic datasets.
    Simulate {
        #[command(subcommand)]
        what: Simulate,
    },
    /// Gene-level utilities.
    Genes {
        #[command(subcommand)]
        what: Genes,
    },
    /// End-to-end experiment artifacts into a directory.
    Reproduce {
        what: Experiment,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Expression matrix to use instead of synthetic data (microarray only).
        #[arg(long, requires = "labels")]
        expr: Option<PathBuf>,
        #[arg(long, requires = "expr")]
        labels: Option<PathBuf>,
        /// Number of train/test splits (microarray only).
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Accuracy study of the approximation orders on a triangular sample.
    Study {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-query timings of each approximation order.
    Bench {
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u8>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Simulate {
    /// Points in the 3x3 chequerboard.
    Chequerboard {
        #[arg(long)]
        per_cell: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-dimensional symmetric triangular sample.
    Triangular {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        center: Option<f64>,
        #[arg(long)]
        halfwidth: Option<f64>,
        /// Class name written in the label column.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expression matrix with planted informative genes, plus its label sidecar.
    Expression {
        #[arg(long)]
        genes: Option<usize>,
        #[arg(long)]
        informative: Option<usize>,
        #[arg(long)]
        shift: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels_out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Genes {
    /// Rank genes by between- over within-class sum of squares.
    Rank {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolved settings plus the provenance they produce.
struct Run {
    cfg: FlatConfig,
    command: &'static str,
    seed: Option<u64>,
}

impl Run {
    fn provenance(&self) -> Provenance {
        Provenance::new(self.command, self.seed, &self.cfg)
    }

    fn seed(&mut self, flag: Option<u64>, default: u64) -> Result<u64> {
        let s = self.cfg.resolve("seed", flag, default)?;
        self.seed = Some(s);
        Ok(s)
    }

    fn kernel(&mut self, k: &KernelArgs) -> Result<Kernel> {
        let family = self.cfg.resolve("kernel.family", k.family.clone(), "gaussian".to_string())?;
        let (tau, c) = if family == "constant" {
            (None, Some(self.cfg.resolve("kernel.c", k.c, 1.0)?))
        } else {
            (Some(self.cfg.resolve("kernel.tau", k.tau, 1.0)?), None)
        };
        kernel_from_parts(&family, tau, c)
    }

    fn method(&mut self, flag: Option<String>) -> Result<Method> {
        self.cfg.resolve("order", flag, "3".to_string())?.parse()
    }

    fn emit_csv(&self, out: Option<&Path>, body: &str) -> Result<()> {
        let text = self.provenance().csv(body);
        match out {
            Some(p) => write_atomic(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, out: Option<&Path>, value: &T) -> Result<()> {
        let text = self.provenance().json(value)?;
        match out {
            Some(p) => write_atomic(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn csv_body(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn perm(run: &mut Run, mode: PermMode, matrix: &Path, alpha: Option<f64>, order: Option<u8>, out: Option<&Path>) -> Result<()> {
    let alpha = run.cfg.resolve("alpha", alpha, 1.0)?;
    let a = load_matrix(input(matrix)?)?;
    let n = a.n();
    let lead: Vec<usize> = (0..n.saturating_sub(1)).collect();
    let query = |a: &permclass::kernel::SquareMatrix| QueryColumn {
        self_sim: a.get(n - 1, n - 1),
        cross: lead.iter().map(|&i| a.get(i, n - 1)).collect(),
    };
    let mut rows = Vec::new();
    match mode {
        PermMode::Exact => {
            let engine = ExactEngine::default();
            rows.push(("per_alpha".to_string(), engine.per_alpha(&a, alpha)?));
            if n >= 1 {
                let r = engine.ratio(&a.submatrix(&lead), &query(&a), alpha)?;
                rows.push(("ratio_last".to_string(), r));
            }
        }
        PermMode::Approx => {
            let k = ApproxOrder::new(run.cfg.resolve("order", order, 3u8)?)?;
            if n == 0 {
                return Err(Error::InvalidParameter("approximate ratio needs a nonempty matrix".into()));
            }
            // the leading block as an explicit-matrix kernel over indexed points
            let sub = a.submatrix(&lead);
            let kernel = Kernel::ProjectionMatrix { matrix: sub.rows() };
            let points: Vec<Vec<f64>> = lead.iter().map(|&i| vec![i as f64]).collect();
            let table = build_ratio_table(gram(&kernel, &points)?, Alpha::new(alpha)?, k)?;
            rows.push((format!("ratio_order{}", k.get()), table.ratio_for_column(&query(&a), k)?));
        }
    }
    let body = csv_body(
        &["quantity".into(), "value".into()],
        rows.into_iter().map(|(q, v)| vec![q, v.to_string()]),
    );
    run.emit_csv(out, &body)
}

#[derive(Deserialize)]
struct GridRow {
    family: String,
    tau: Option<f64>,
    alpha: f64,
    c: Option<f64>,
}

fn read_grid(path: &Path, method: Method) -> Result<Vec<ModelParams>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    rdr.deserialize::<GridRow>()
        .map(|r| {
            let r = r?;
            ModelParams::new(kernel_from_parts(&r.family, r.tau, r.c)?, r.alpha, method)
        })
        .collect()
}

fn reproduce(
    run: &mut Run,
    what: Experiment,
    seed: Option<u64>,
    dir: &Path,
    expr: Option<(PathBuf, PathBuf)>,
    repetitions: Option<usize>,
) -> Result<()> {
    match what {
        Experiment::Table1 => {
            let seed = run.seed(seed, 1)?;
            let cfg = Table1Config { seed, ..Default::default() };
            run.cfg.set("per_cell", cfg.per_cell);
            run.cfg.set("grid_resolution", cfg.grid_resolution);
            run.cfg.set("taus", join(&cfg.taus));
            run.cfg.set("alphas", join(&cfg.alphas));
            run.cfg.set("folds", cfg.folds);
            run.cfg.set("objective", cfg.objective);
            run.cfg.set("order", cfg.order.get());
            run.cfg.set("knn_k", cfg.knn_k);
            let report = run_table1(&cfg)?;
            let data = gen_chequerboard(cfg.per_cell, permclass::datasets::derive_seed(seed, 0));
            let mut train = Vec::new();
            write_features(&mut train, &data, &run.provenance().comment_lines())?;
            write_atomic(&dir.join("chequerboard_train.csv"), &String::from_utf8_lossy(&train))?;
            write_atomic(&dir.join("table1.csv"), &run.provenance().csv(&report.to_csv()))?;
            write_atomic(&dir.join("table1.json"), &run.provenance().json(&report)?)?;
            print!("{}", report.to_csv());
        }
        Experiment::Figure1 => {
            let seed = run.seed(seed, AccuracyConfig::default().seed)?;
            let report = run_figure1(&AccuracyConfig { seed, ..Default::default() })?;
            write_figure1(run, dir, &report)?;
        }
        Experiment::Microarray => {
            let seed = run.seed(seed, 1)?;
            let mut cfg = MicroarrayConfig::default().with_seed(seed);
            cfg.plan.repetitions = run.cfg.resolve("repetitions", repetitions, cfg.plan.repetitions)?;
            run.cfg.set("train_size", cfg.plan.train_size);
            run.cfg.set("test_size", cfg.plan.test_size);
            run.cfg.set("gene_counts", join(&cfg.gene_counts));
            run.cfg.set("families", cfg.families.iter().map(|k| k.family()).collect::<Vec<_>>().join(","));
            run.cfg.set("kernel.tau", "median training distance");
            run.cfg.set("alpha", cfg.alpha);
            run.cfg.set("order", cfg.order.get());
            run.cfg.set("knn_k", cfg.knn_k);
            let report = match expr {
                Some((e, l)) => {
                    run.cfg.set("expr", e.display());
                    run.cfg.set("labels", l.display());
                    run_microarray_on(&load_expression(input(&e)?, input(&l)?)?, Vec::new(), &cfg)?
                }
                None => {
                    let e = &cfg.expression;
                    run.cfg.set("genes", e.genes);
                    run.cfg.set("informative", e.informative);
                    run.cfg.set("shift", e.shift);
                    run.cfg.set("class_sizes", join(&e.class_sizes));
                    run_microarray(&cfg)?
                }
            };
            let prov = run.provenance();
            write_atomic(&dir.join("microarray_errors.csv"), &prov.csv(&report.errors_csv()))?;
            write_atomic(&dir.join("microarray_projection.csv"), &prov.csv(&report.projection_csv()))?;
            write_atomic(&dir.join("microarray.json"), &prov.json(&report)?)?;
            print!("{}", report.errors_csv());
            if let Some(u) = report.is_u_shaped() {
                println!("u_shaped,{u}");
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StudySummary<'a> {
    config: &'a AccuracyConfig,
    central_region: String,
    central_four_over_three: f64,
    central_three_over_two: f64,
    gap_two_three: f64,
    gap_three_four: f64,
    exact: &'a permclass::bench::ExactComparison,
    separated_max_abs_diff: f64,
    separated_max_rel_diff_vs_four: [f64; 2],
    overlapped_max_abs_diff: f64,
    overlapped_max_rel_diff_vs_four: [f64; 2],
}

fn write_figure1(run: &mut Run, dir: &Path, report: &Figure1Report) -> Result<()> {
    let s = &report.study;
    let c = &s.config;
    run.cfg.set("n", c.n);
    run.cfg.set("kernel.family", "gaussian");
    run.cfg.set("kernel.tau", c.tau);
    run.cfg.set("alpha", c.alpha);
    run.cfg.set("grid_points", c.grid_points);
    run.cfg.set("central_halfwidth", c.central_halfwidth);
    run.cfg.set("exact_subsample", c.exact_subsample);
    run.cfg.set("separated_center", c.separated_center);
    run.cfg.set("overlapped_center", c.overlapped_center);
    let summary = StudySummary {
        config: &s.config,
        central_region: format!("|t| <= {}", s.config.central_halfwidth),
        central_four_over_three: s.central_four_over_three,
        central_three_over_two: s.central_three_over_two,
        gap_two_three: s.gap_two_three,
        gap_three_four: s.gap_three_four,
        exact: &s.exact,
        separated_max_abs_diff: s.separated.max_abs_diff,
        separated_max_rel_diff_vs_four: s.separated.max_rel_diff_vs_four,
        overlapped_max_abs_diff: s.overlapped.max_abs_diff,
        overlapped_max_rel_diff_vs_four: s.overlapped.max_rel_diff_vs_four,
    };
    let prov = run.provenance();
    write_atomic(&dir.join("figure1_ratios.csv"), &prov.csv(&report.ratios_csv()))?;
    write_atomic(&dir.join("figure1_probabilities.csv"), &prov.csv(&report.probabilities_csv()))?;
    write_atomic(&dir.join("figure1.json"), &prov.json(&summary)?)?;
    println!(
        "central R3/R2 {:.4}  R2/R1 {:.4}  separated max |dp| {:.4}",
        s.central_four_over_three, s.central_three_over_two, s.separated.max_abs_diff
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => FlatConfig::load(input(p)?)?,
        None => FlatConfig::default(),
    };
    let mut run = Run { cfg, command: "", seed: None };
    match cli.command {
        Command::Perm { mode, matrix, alpha, order, out } => {
            run.command = "perm";
            perm(&mut run, mode, &matrix, alpha, order, out.as_deref())
        }
        Command::Fit { data, kernel, alpha, order, out } => {
            run.command = "fit";
            let data = load_features(input(&data)?)?;
            let kernel = run.kernel(&kernel)?;
            let alpha = run.cfg.resolve("alpha", alpha, 1.0)?;
            let method = run.method(order)?;
            let model = fit(&data, &ModelParams::new(kernel, alpha, method)?)?;
            run.emit_json(Some(&out), &model.to_saved())
        }
        Command::Predict { model, queries, out } => {
            run.command = "predict";
            let saved: SavedModel = serde_json::from_value(json_result(&std::fs::read_to_string(input(&model)?)?)?)?;
            run.cfg.set("model", model.display());
            let fitted = saved.refit()?;
            let rows = fitted.predict_many(&load_points(input(&queries)?)?)?;
            let names = &saved.data.class_names;
            let mut header = vec!["index".to_string()];
            header.extend(names.iter().map(|c| format!("p_{c}")));
            header.push("label".into());
            let body = csv_body(
                &header,
                rows.iter().enumerate().map(|(i, r)| {
                    let mut v = vec![i.to_string()];
                    v.extend(r.probs.iter().map(f64::to_string));
                    v.push(names[r.label].clone());
                    v
                }),
            );
            run.emit_csv(out.as_deref(), &body)
        }
        Command::Partition { data, lambda, kernel, order, sample, out } => {
            run.command = "partition";
            let points = load_points(input(&data)?)?;
            let kernel = run.kernel(&kernel)?;
            let lambda = run.cfg.resolve("lambda", lambda, 1.0)?;
            let method = run.method(order)?;
            let sample = run.cfg.resolve_opt("sample", sample)?;
            run.seed = sample;
            let params = ModelParams::new(kernel, 1.0, method)?.with_lambda(lambda);
            let rule = sample.map_or(AssignRule::Argmax, AssignRule::Sample);
            let p = sequential_partition(&points, &params, rule)?;
            #[derive(Serialize)]
            struct Out<'a> {
                block_count: usize,
                blocks: &'a [Vec<usize>],
                labels: Vec<usize>,
            }
            run.emit_json(
                out.as_deref(),
                &Out { block_count: p.block_count(), blocks: p.blocks(), labels: p.labels() },
            )
        }
        Command::Cv { data, grid, folds, objective, order, seed, stratified, out } => {
            run.command = "cv";
            let data = load_features(input(&data)?)?;
            let method = run.method(order)?;
            let objective: Objective = run.cfg.resolve("objective", objective, "error".to_string())?.parse()?;
            let seed = run.seed(seed, 0)?;
            let candidates = match grid {
                Some(g) => {
                    run.cfg.set("grid", g.display());
                    read_grid(input(&g)?, method)?
                }
                None => default_grid(&data, &[Kernel::exponential(1.0), Kernel::gaussian(1.0)], method)?,
            };
            let mut spec = CVSpec::new(candidates, objective, seed);
            spec.folds = run.cfg.resolve("folds", folds, 10)?;
            spec.stratified = run.cfg.resolve("stratified", stratified.then_some(true), false)?;
            let report = cross_validate(&data, &spec)?;
            run.emit_json(out.as_deref(), &report)
        }
        Command::Simulate { what } => match what {
            Simulate::Chequerboard { per_cell, seed, out } => {
                run.command = "simulate chequerboard";
                let seed = run.seed(seed, 0)?;
                let per_cell = run.cfg.resolve("per_cell", per_cell, 10)?;
                emit_features(&run, out.as_deref(), &gen_chequerboard(per_cell, seed))
            }
            Simulate::Triangular { n, center, halfwidth, label, seed, out } => {
                run.command = "simulate triangular";
                let seed = run.seed(seed, 0)?;
                let n = run.cfg.resolve("n", n, 100)?;
                let center = run.cfg.resolve("center", center, 0.0)?;
                let halfwidth = run.cfg.resolve("halfwidth", halfwidth, std::f64::consts::PI)?;
                let label = run.cfg.resolve("label", label, "1".to_string())?;
                let pts = gen_triangular(n, center, halfwidth, seed)?;
                let data = LabeledDataset::new(pts, vec![0; n], vec![label])?;
                emit_features(&run, out.as_deref(), &data)
            }
            Simulate::Expression { genes, informative, shift, seed, out, labels_out } => {
                run.command = "simulate expression";
                let d = SyntheticExpression::default();
                let spec = SyntheticExpression {
                    genes: run.cfg.resolve("genes", genes, d.genes)?,
                    informative: run.cfg.resolve("informative", informative, d.informative)?,
                    shift: run.cfg.resolve("shift", shift, d.shift)?,
                    seed: run.seed(seed, 0)?,
                    ..d
                };
                let (expr, planted) = gen_expression(&spec)?;
                let (tmp, tmp_labels) = (partial(&out), partial(&labels_out));
                save_expression(&tmp, &tmp_labels, &expr)?;
                std::fs::rename(tmp, &out)?;
                std::fs::rename(tmp_labels, &labels_out)?;
                let ids: Vec<&str> = planted.iter().map(|&g| expr.gene_ids[g].as_str()).collect();
                println!("informative genes: {}", ids.join(","));
                Ok(())
            }
        },
        Command::Genes { what: Genes::Rank { expr, labels, top, out } } => {
            run.command = "genes rank";
            let m = load_expression(input(&expr)?, input(&labels)?)?;
            let top = run.cfg.resolve("top", top, m.n_genes())?;
            let ranked = rank_genes_bw(&m)?;
            let body = csv_body(
                &["rank".into(), "gene".into(), "score".into()],
                ranked
                    .iter()
                    .take(top)
                    .enumerate()
                    .map(|(r, g)| vec![(r + 1).to_string(), g.id.clone(), g.score.to_string()]),
            );
            run.emit_csv(out.as_deref(), &body)
        }
        Command::Reproduce { what, seed, out, expr, labels, repetitions } => {
            run.command = match what {
                Experiment::Table1 => "reproduce table1",
                Experiment::Figure1 => "reproduce figure1",
                Experiment::Microarray => "reproduce microarray",
            };
            reproduce(&mut run, what, seed, &out, expr.zip(labels), repetitions)
        }
        Command::Study { seed, n, tau, alpha, out } => {
            run.command = "study";
            let d = AccuracyConfig::default();
            let cfg = AccuracyConfig {
                seed: run.seed(seed, d.seed)?,
                n: run.cfg.resolve("n", n, d.n)?,
                tau: run.cfg.resolve("kernel.tau", tau, d.tau)?,
                alpha: run.cfg.resolve("alpha", alpha, d.alpha)?,
                ..d
            };
            write_figure1(&mut run, &out, &Figure1Report { study: accuracy_study(&cfg)? })
        }
        Command::Bench { orders, sizes, seed, repeats, out } => {
            run.command = "bench";
            let d = BenchConfig::default();
            let orders = match orders {
                Some(o) => o,
                None => match run.cfg.get("orders") {
                    Some(s) => parse_list(s)?,
                    None => vec![1, 2, 3],
                },
            };
            let sizes = match sizes {
                Some(s) => s,
                None => match run.cfg.get("sizes") {
                    Some(s) => parse_list(s)?,
                    None => d.sizes.clone(),
                },
            };
            run.cfg.set("orders", join(&orders));
            run.cfg.set("sizes", join(&sizes));
            let cfg = BenchConfig {
                orders,
                sizes,
                seed: run.seed(seed, d.seed)?,
                repeats: run.cfg.resolve("repeats", repeats, d.repeats)?,
                ..d
            };
            let report = bench_orders(&cfg)?;
            let body = csv_body(
                &["n".into(), "order".into(), "table_secs".into(), "median_query_secs".into()],
                report.rows.iter().map(|r| {
                    vec![r.n.to_string(), r.order.to_string(), r.table_secs.to_string(), r.median_query_secs.to_string()]
                }),
            );
            for (k, s) in &report.slopes {
                eprintln!("order {k}: log-log slope {s:.3}");
            }
            match out {
                Some(p) => {
                    run.emit_csv(Some(&p), &body)?;
                    run.emit_json(Some(&p.with_extension("json")), &report)
                }
                None => run.emit_csv(None, &body),
            }
        }
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad list item {x:?} in {s:?}")))
        })
        .collect()
}

/// `path`, after checking that it names a readable file.
fn input(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::InvalidParameter(format!("input file {} does not exist", path.display())))
    }
}

fn partial(p: &Path) -> PathBuf {
    let mut name = p.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    p.with_file_name(name)
}

fn emit_features(run: &Run, out: Option<&Path>, data: &LabeledDataset) -> Result<()> {
    let mut buf = Vec::new();
    write_features(&mut buf, data, &run.provenance().comment_lines())?;
    let text = String::from_utf8_lossy(&buf);
    match out {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
