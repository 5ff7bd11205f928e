// Independent brute-force oracles shared by the integration tests. Nothing
// here calls into the exact engine.
#![allow(dead_code)]

use permclass::cyclic::{build_ratio_table, ApproxOrder};
use permclass::kernel::{gram, Kernel, QueryColumn, SquareMatrix};
use permclass::permanent::Alpha;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q: Vec<usize> = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn cycle_count(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut c = 0;
    for s in 0..p.len() {
        if !seen[s] {
            c += 1;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = p[i];
            }
        }
    }
    c
}

/// `sum_s alpha^{cycles(s)} prod_i a[i][s(i)]` by listing every permutation.
pub fn naive_per_alpha(a: &[Vec<f64>], alpha: f64) -> f64 {
    permutations(a.len())
        .iter()
        .map(|p| alpha.powi(cycle_count(p) as i32) * p.iter().enumerate().map(|(i, &j)| a[i][j]).product::<f64>())
        .sum()
}

pub fn naive_cyp(a: &[Vec<f64>]) -> f64 {
    permutations(a.len())
        .iter()
        .filter(|p| cycle_count(p) == 1)
        .map(|p| p.iter().enumerate().map(|(i, &j)| a[i][j]).product::<f64>())
        .sum()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

pub fn rising(x: f64, n: usize) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Ewens sampling formula for a partition with the given block sizes.
pub fn ewens(block_sizes: &[usize], lambda: f64) -> f64 {
    let n: usize = block_sizes.iter().sum();
    let num: f64 = block_sizes.iter().map(|&b| lambda * factorial(b - 1)).product();
    num / rising(lambda, n)
}

pub fn sub(a: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| idx.iter().map(|&j| a[i][j]).collect()).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..n).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

pub fn square(a: &[Vec<f64>]) -> SquareMatrix {
    SquareMatrix::from_rows(a).unwrap()
}

/// Exact ratio `per(bordered) / per(a)` from the naive oracle.
pub fn naive_ratio(a: &[Vec<f64>], q: &QueryColumn, alpha: f64) -> f64 {
    let full = square(a).bordered(q).unwrap().rows();
    naive_per_alpha(&full, alpha) / naive_per_alpha(a, alpha)
}

/// Approximate ratio for an explicit training matrix `a` and query column,
/// going through the public table API with an explicit-matrix kernel.
pub fn approx_ratio(a: &[Vec<f64>], q: &QueryColumn, alpha: f64, order: u8) -> f64 {
    let n = a.len();
    let full = square(a).bordered(q).unwrap().rows();
    let kernel = Kernel::ProjectionMatrix { matrix: full };
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let order = ApproxOrder::new(order).unwrap();
    let table = build_ratio_table(gram(&kernel, &points).unwrap(), Alpha::new(alpha).unwrap(), order).unwrap();
    table.ratio_for_column(q, order).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}
