//! Synthetic generators, CSV ingestion, and microarray preprocessing.
//!
//! Every generator is a pure function of its parameters and seed. Seeds for
//! repeated sub-experiments are derived from a master seed with
//! [`derive_seed`]: `splitmix64(master + index * 0x9E3779B97F4A7C15)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledDataset;
use crate::error::{Error, Result};
use crate::kernel::{Point, SquareMatrix};

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th sub-experiment of a run seeded with `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Class index on the 3x3 chequerboard over `[0, 3]^2`: 0 ("1") when the cell
/// coordinates have an even sum, 1 ("2") otherwise.
pub fn chequerboard_label(p: &[f64]) -> usize {
    let cell = |v: f64| (v.floor().clamp(0.0, 2.0)) as usize;
    (cell(p[0]) + cell(p[1])) % 2
}

/// `per_cell` uniform points in each unit square of the 3x3 board.
pub fn gen_chequerboard(per_cell: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(9 * per_cell);
    let mut labels = Vec::with_capacity(9 * per_cell);
    for j in 0..3 {
        for i in 0..3 {
            for _ in 0..per_cell {
                let p = vec![i as f64 + rng.gen::<f64>(), j as f64 + rng.gen::<f64>()];
                labels.push((i + j) % 2);
                points.push(p);
            }
        }
    }
    LabeledDataset::with_numbered_classes(points, labels, 2).expect("labels are 0 or 1")
}

/// `resolution^2` cell-centred grid points over `(0, 3)^2` with their true
/// chequerboard labels.
pub fn gen_grid_testset(resolution: usize) -> Result<LabeledDataset> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let step = 3.0 / resolution as f64;
    let mut points = Vec::with_capacity(resolution * resolution);
    for b in 0..resolution {
        for a in 0..resolution {
            points.push(vec![(a as f64 + 0.5) * step, (b as f64 + 0.5) * step]);
        }
    }
    let labels = points.iter().map(|p| chequerboard_label(p)).collect();
    LabeledDataset::with_numbered_classes(points, labels, 2)
}

/// Draws from the symmetric triangular density on
/// `(center - halfwidth, center + halfwidth)` by inverting its CDF.
pub fn gen_triangular(n: usize, center: f64, halfwidth: f64, seed: u64) -> Result<Vec<Point>> {
    if !(halfwidth > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "halfwidth must be positive, got {halfwidth}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            let x = if u < 0.5 {
                -1.0 + (2.0 * u).sqrt()
            } else {
                1.0 - (2.0 * (1.0 - u)).sqrt()
            };
            vec![center + halfwidth * x]
        })
        .collect())
}

/// Genes by samples, with a class label per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMatrix {
    /// `values[g][s]`
    pub values: Vec<Vec<f64>>,
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub sample_labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl ExpressionMatrix {
    pub fn n_genes(&self) -> usize {
        self.values.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    /// Feature vectors over `genes` for the given samples.
    pub fn features(&self, genes: &[usize], samples: &[usize]) -> Vec<Point> {
        samples
            .iter()
            .map(|&s| genes.iter().map(|&g| self.values[g][s]).collect())
            .collect()
    }

    pub fn labeled(&self, genes: &[usize], samples: &[usize]) -> LabeledDataset {
        LabeledDataset {
            points: self.features(genes, samples),
            labels: samples.iter().map(|&s| self.sample_labels[s]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Parameters of the synthetic expression generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExpression {
    pub genes: usize,
    /// Samples per class, e.g. `[47, 25]`.
    pub class_sizes: Vec<usize>,
    pub informative: usize,
    /// Mean shift of informative genes in the second class, in noise units.
    pub shift: f64,
    pub seed: u64,
}

impl Default for SyntheticExpression {
    fn default() -> Self {
        SyntheticExpression {
            genes: 500,
            class_sizes: vec![47, 25],
            informative: 5,
            shift: 3.0,
            seed: 0,
        }
    }
}

/// Standard normal noise with `informative` genes (at seeded random positions)
/// shifted by `shift` in every class after the first. Returns the matrix and
/// the informative gene indices.
pub fn gen_expression(spec: &SyntheticExpression) -> Result<(ExpressionMatrix, Vec<usize>)> {
    if spec.informative > spec.genes {
        return Err(Error::InvalidParameter(format!(
            "{} informative genes out of {}",
            spec.informative, spec.genes
        )));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut order: Vec<usize> = (0..spec.genes).collect();
    order.shuffle(&mut rng);
    let mut informative = order[..spec.informative].to_vec();
    informative.sort_unstable();

    let sample_labels: Vec<usize> = spec
        .class_sizes
        .iter()
        .enumerate()
        .flat_map(|(r, &m)| std::iter::repeat_n(r, m))
        .collect();
    let n = sample_labels.len();
    let mut values = vec![vec![0.0; n]; spec.genes];
    for row in values.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    for &g in &informative {
        for (s, &l) in sample_labels.iter().enumerate() {
            if l > 0 {
                values[g][s] += spec.shift;
            }
        }
    }
    let m = ExpressionMatrix {
        values,
        gene_ids: (0..spec.genes).map(|g| format!("g{g}")).collect(),
        sample_ids: (0..n).map(|s| format!("s{s}")).collect(),
        sample_labels,
        class_names: (1..=spec.class_sizes.len()).map(|r| r.to_string()).collect(),
    };
    Ok((m, informative))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneScore {
    pub index: usize,
    pub id: String,
    pub score: f64,
}

/// Between-group over within-group sum of squares for every gene, computed on
/// `samples` only, sorted by decreasing score (ties by gene index).
pub fn rank_genes_bw_on(expr: &ExpressionMatrix, samples: &[usize]) -> Result<Vec<GeneScore>> {
    let k = expr.class_names.len();
    let mut counts = vec![0usize; k];
    for &s in samples {
        counts[expr.sample_labels[s]] += 1;
    }
    let populated = counts.iter().filter(|&&c| c > 0).count();
    if populated < 2 || counts.contains(&1) {
        return Err(Error::InvalidParameter(format!(
            "gene ranking needs at least two classes with two samples each, got counts {counts:?}"
        )));
    }
    let mut scores: Vec<GeneScore> = expr
        .values
        .iter()
        .enumerate()
        .map(|(g, row)| {
            let mut sums = vec![0.0; k];
            for &s in samples {
                sums[expr.sample_labels[s]] += row[s];
            }
            let grand = sums.iter().sum::<f64>() / samples.len() as f64;
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(&t, &c)| if c > 0 { t / c as f64 } else { 0.0 })
                .collect();
            let bss: f64 = means
                .iter()
                .zip(&counts)
                .map(|(&m, &c)| c as f64 * (m - grand) * (m - grand))
                .sum();
            let wss: f64 = samples
                .iter()
                .map(|&s| {
                    let d = row[s] - means[expr.sample_labels[s]];
                    d * d
                })
                .sum();
            let score = if wss > 0.0 {
                bss / wss
            } else if bss > 0.0 {
                log::info!("gene {}: zero within-group variance, score +inf", expr.gene_ids[g]);
                f64::INFINITY
            } else {
                log::info!("gene {}: constant, score 0", expr.gene_ids[g]);
                0.0
            };
            GeneScore {
                index: g,
                id: expr.gene_ids[g].clone(),
                score,
            }
        })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    Ok(scores)
}

pub fn rank_genes_bw(expr: &ExpressionMatrix) -> Result<Vec<GeneScore>> {
    let all: Vec<usize> = (0..expr.n_samples()).collect();
    rank_genes_bw_on(expr, &all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub repetitions: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            repetitions: 200,
            train_size: 48,
            test_size: 24,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform random train/test splits of `0..n`; split `r` is drawn from a
/// generator seeded with `derive_seed(plan.seed, r)`.
pub fn make_splits(n: usize, plan: &SplitPlan) -> Result<Vec<Split>> {
    if plan.train_size + plan.test_size != n {
        return Err(Error::InvalidParameter(format!(
            "train {} + test {} != n = {n}",
            plan.train_size, plan.test_size
        )));
    }
    Ok((0..plan.repetitions)
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(plan.seed, r as u64));
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut train = idx[..plan.train_size].to_vec();
            let mut test = idx[plan.train_size..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect())
}

/// Per-feature mean and standard deviation estimated on `train`, applied to
/// both sets. Features with zero spread are only centred.
pub fn standardize(train: &mut [Point], test: &mut [Point]) {
    let Some(d) = train.first().map(Vec::len) else {
        return;
    };
    let n = train.len() as f64;
    for f in 0..d {
        let mean = train.iter().map(|p| p[f]).sum::<f64>() / n;
        let var = train.iter().map(|p| (p[f] - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for p in train.iter_mut().chain(test.iter_mut()) {
            p[f] = (p[f] - mean) / sd;
        }
    }
}

/// Two-dimensional display coordinates: the first axis is the projection onto
/// the line through the first two class centroids, the second the leading
/// principal component of what remains.
pub fn projection_2d(points: &[Point], labels: &[usize]) -> Vec<(f64, f64)> {
    let n = points.len();
    let Some(d) = points.first().map(Vec::len) else {
        return Vec::new();
    };
    let mean_of = |sel: &dyn Fn(usize) -> bool| {
        let mut m = vec![0.0; d];
        let mut c = 0.0f64;
        for (i, p) in points.iter().enumerate() {
            if sel(i) {
                c += 1.0;
                for f in 0..d {
                    m[f] += p[f];
                }
            }
        }
        m.iter_mut().for_each(|v| *v /= c.max(1.0));
        m
    };
    let grand = mean_of(&|_| true);
    let m0 = mean_of(&|i| labels[i] == 0);
    let m1 = mean_of(&|i| labels[i] == 1);
    let mut axis: Vec<f64> = m1.iter().zip(&m0).map(|(a, b)| a - b).collect();
    let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        axis.iter_mut().for_each(|v| *v /= norm);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let centred: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&grand).map(|(a, b)| a - b).collect())
        .collect();
    let xs: Vec<f64> = centred.iter().map(|c| dot(c, &axis)).collect();
    let resid: Vec<Vec<f64>> = centred
        .iter()
        .zip(&xs)
        .map(|(c, &x)| c.iter().zip(&axis).map(|(v, a)| v - x * a).collect())
        .collect();
    // power iteration on resid^T resid
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    for _ in 0..200 {
        let scores: Vec<f64> = resid.iter().map(|r| dot(r, &v)).collect();
        let mut next = vec![0.0; d];
        for (r, s) in resid.iter().zip(&scores) {
            for f in 0..d {
                next[f] += r[f] * s;
            }
        }
        let nn = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nn == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= nn);
        v = next;
    }
    (0..n).map(|i| (xs[i], dot(&resid[i], &v))).collect()
}

/// Accepted CSV layouts.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvSchema {
    /// Header row, numeric feature columns, final `label` column.
    FeaturesWithLabel,
    /// Genes as rows (first column the gene id, header row of sample ids), plus a
    /// two-column `sample,label` sidecar file.
    ExpressionMatrixWithSidecar { labels: std::path::PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Features(LabeledDataset),
    Expression(ExpressionMatrix),
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?)
}

fn class_index(names: Vec<String>) -> (Vec<String>, HashMap<String, usize>) {
    let mut names = names;
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap_or_default());
    }
    let map = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    (names, map)
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Loaded> {
    match schema {
        CsvSchema::FeaturesWithLabel => load_features(path).map(Loaded::Features),
        CsvSchema::ExpressionMatrixWithSidecar { labels } => {
            load_expression(path, labels).map(Loaded::Expression)
        }
    }
}

pub fn load_features(path: &Path) -> Result<LabeledDataset> {
    let shown = path.display().to_string();
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().next_back() != Some("label") {
        return Err(Error::Schema(format!(
            "{shown}: last column must be `label`, header is {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let d = header.len() - 1;
    let mut points = Vec::new();
    let mut raw_labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(Error::Parse {
                path: shown,
                line: rec.position().map_or(0, |p| p.line()),
                msg: format!("expected {} fields, found {}", d + 1, rec.len()),
            });
        }
        points.push(parse_row(&rec, d, &shown)?);
        raw_labels.push(rec[d].to_string());
    }
    let (names, map) = class_index(raw_labels.clone());
    let labels = raw_labels.iter().map(|l| map[l]).collect();
    LabeledDataset::new(points, labels, names)
}

fn parse_row(rec: &csv::StringRecord, take: usize, shown: &str) -> Result<Vec<f64>> {
    let line = rec.position().map_or(0, |p| p.line());
    if rec.len() < take {
        return Err(Error::Parse {
            path: shown.to_string(),
            line,
            msg: format!("expected {take} fields, found {}", rec.len()),
        });
    }
    rec.iter()
        .take(take)
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                path: shown.to_string(),
                line,
                msg: format!("{f:?} is not a number"),
            })
        })
        .collect()
}

/// Unlabelled feature vectors: a header row and numeric columns. A final
/// `label` column, if present, is ignored.
pub fn load_points(path: &Path) -> Result<Vec<Point>> {
    let shown = path.display().to_string();
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let d = header.len() - usize::from(header.iter().next_back() == Some("label"));
    rdr.records()
        .map(|rec| parse_row(&rec?, d, &shown))
        .collect()
}

/// Dense square matrix, one row per line, no header.
pub fn load_matrix(path: &Path) -> Result<SquareMatrix> {
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let rows = rdr
        .records()
        .map(|rec| {
            let rec = rec?;
            let len = rec.len();
            parse_row(&rec, len, &shown)
        })
        .collect::<Result<Vec<_>>>()?;
    SquareMatrix::from_rows(&rows)
}

/// Load a genes-by-samples matrix and its sample/label sidecar. Genes with a
/// missing or unparsable value are dropped with a warning.
pub fn load_expression(path: &Path, labels_path: &Path) -> Result<ExpressionMatrix> {
    let shown = path.display().to_string();
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Schema(format!("{shown}: no sample columns")));
    }
    let sample_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::new();
    let mut gene_ids = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: shown,
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let row: Option<Vec<f64>> = rec.iter().skip(1).map(|f| f.parse::<f64>().ok()).collect();
        match row {
            Some(r) if r.iter().all(|v| v.is_finite()) => {
                gene_ids.push(rec[0].to_string());
                values.push(r);
            }
            _ => log::warn!("{shown}: line {line}: gene {} has missing values, dropped", &rec[0]),
        }
    }

    let lshown = labels_path.display().to_string();
    let mut lr = reader(labels_path)?;
    let lheader = lr.headers()?.clone();
    if lheader.len() != 2 {
        return Err(Error::Schema(format!(
            "{lshown}: sidecar must have two columns (sample,label)"
        )));
    }
    let mut by_sample: HashMap<String, String> = HashMap::new();
    for rec in lr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 || rec[1].is_empty() {
            return Err(Error::Parse {
                path: lshown,
                line,
                msg: "expected `sample,label`".into(),
            });
        }
        if !sample_ids.iter().any(|s| s == &rec[0]) {
            return Err(Error::Parse {
                path: lshown,
                line,
                msg: format!("unknown sample {:?}", &rec[0]),
            });
        }
        by_sample.insert(rec[0].to_string(), rec[1].to_string());
    }
    let raw: Vec<String> = sample_ids
        .iter()
        .map(|s| {
            by_sample
                .get(s)
                .cloned()
                .ok_or_else(|| Error::Schema(format!("{lshown}: no label for sample {s:?}")))
        })
        .collect::<Result<_>>()?;
    let (class_names, map) = class_index(raw.clone());
    Ok(ExpressionMatrix {
        values,
        gene_ids,
        sample_labels: raw.iter().map(|l| map[l]).collect(),
        sample_ids,
        class_names,
    })
}

/// Write `# `-prefixed comment lines, then the dataset as a features CSV.
pub fn write_features(out: &mut impl Write, data: &LabeledDataset, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let d = data.dim().unwrap_or(0);
    let mut header: Vec<String> = (1..=d).map(|f| format!("x{f}")).collect();
    header.push("label".into());
    writeln!(out, "{}", header.join(","))?;
    for (p, &l) in data.points.iter().zip(&data.labels) {
        let mut fields: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        fields.push(data.class_names[l].clone());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn save_features(path: &Path, data: &LabeledDataset, comments: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_features(&mut w, data, comments)?;
    w.flush()?;
    Ok(())
}

/// Write an expression matrix and its sidecar in the layout `load_expression` reads.
pub fn save_expression(path: &Path, labels_path: &Path, expr: &ExpressionMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "gene,{}", expr.sample_ids.join(","))?;
    for (id, row) in expr.gene_ids.iter().zip(&expr.values) {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{id},{}", fields.join(","))?;
    }
    w.flush()?;
    let mut l = BufWriter::new(File::create(labels_path)?);
    writeln!(l, "sample,label")?;
    for (s, &c) in expr.sample_ids.iter().zip(&expr.sample_labels) {
        writeln!(l, "{s},{}", expr.class_names[c])?;
    }
    l.flush()?;
    Ok(())
}
