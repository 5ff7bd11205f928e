mod common;

use common::*;
use permclass::cyclic::{
    build_ratio_table, closed_form_ratio_for_column, cyclic_ratio_approx, ratio_approx, ApproxOrder, Structure,
};
use permclass::datasets::gen_triangular;
use permclass::kernel::{gram, Kernel, QueryColumn};
use permclass::permanent::{cyclic_ratio_exact, ratio_exact, Alpha};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn order(k: u8) -> ApproxOrder {
    ApproxOrder::new(k).unwrap()
}

#[test]
fn order_n_is_exact_for_small_n() {
    let mut r = rng(10);
    for trial in 0..60 {
        let n = trial % 4;
        let alpha = [0.5, 1.0, 2.0][trial % 3];
        let kernel = Kernel::gaussian(r.gen_range(0.3..2.0));
        let x = random_points(&mut r, n, 2);
        let t = random_points(&mut r, 1, 2).remove(0);
        let table = build_ratio_table(gram(&kernel, &x).unwrap(), Alpha::new(alpha).unwrap(), order(3)).unwrap();
        let got = ratio_approx(&t, &table, order(n as u8)).unwrap();
        let want = ratio_exact(&t, &x, &kernel, alpha).unwrap();
        let tol = if n <= 1 { 1e-12 } else { 1e-10 };
        assert!(rel_err(got, want) <= tol, "n={n}: {got} vs {want}");
        if n >= 1 {
            let c = cyclic_ratio_approx(&t, &gram(&kernel, &x).unwrap(), order(n as u8)).unwrap();
            let ce = cyclic_ratio_exact(&t, &x, &kernel).unwrap();
            assert!(rel_err(c, ce) <= 1e-10, "cyclic n={n}: {c} vs {ce}");
        }
    }
}

#[test]
fn diagonal_and_constant_kernels() {
    let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
    let alpha = 1.7;
    // distinct points under a diagonal kernel: only the query's own term survives
    let diag = Kernel::DiagonalIndicator { level: 1.0, table: vec![2.0; 8] };
    let g = gram(&diag, &x).unwrap();
    let table = build_ratio_table(g.clone(), Alpha::new(alpha).unwrap(), order(3)).unwrap();
    for k in 0..=3 {
        let v = ratio_approx(&[6.0], &table, order(k)).unwrap();
        assert!((v - alpha * 2.0).abs() < 1e-12);
        assert_eq!(cyclic_ratio_approx(&[6.0], &g, order(k)).unwrap(), 0.0);
    }
    let c = 0.8;
    let g = gram(&Kernel::constant(c), &x).unwrap();
    let table = build_ratio_table(g.clone(), Alpha::new(alpha).unwrap(), order(3)).unwrap();
    assert!((ratio_approx(&[9.0], &table, order(0)).unwrap() - c * alpha).abs() < 1e-12);
    for k in 1..=3 {
        let v = ratio_approx(&[9.0], &table, order(k)).unwrap();
        assert!(rel_err(v, c * (alpha + 5.0)) < 1e-12, "k={k}: {v}");
        let cy = cyclic_ratio_approx(&[9.0], &g, order(k)).unwrap();
        assert!(rel_err(cy, c * 5.0) < 1e-12, "k={k}: {cy}");
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Diagonal,
    Constant,
    Blocks,
}

/// Structured training matrix, its block labels, and an arbitrary query column.
fn structured(r: &mut ChaCha8Rng, n: usize, shape: Shape) -> (Vec<Vec<f64>>, QueryColumn) {
    let labels: Vec<usize> = match shape {
        Shape::Diagonal => (0..n).collect(),
        Shape::Constant => vec![0; n],
        Shape::Blocks => {
            // at least one block of size two
            let mut l: Vec<usize> = (0..n).map(|_| r.gen_range(0..3)).collect();
            l[1] = l[0];
            l
        }
    };
    let levels: Vec<f64> = (0..n.max(3)).map(|_| r.gen_range(0.3..2.0)).collect();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if labels[i] == labels[j] { levels[labels[i]] } else { 0.0 })
                .collect()
        })
        .collect();
    let q = QueryColumn {
        self_sim: r.gen_range(0.5..1.5),
        cross: (0..n).map(|_| r.gen_range(0.0..1.0)).collect(),
    };
    (a, q)
}

#[test]
fn structured_matrices_are_exact_from_order_two() {
    let mut r = rng(11);
    for trial in 0..60 {
        let shape = [Shape::Diagonal, Shape::Constant, Shape::Blocks][trial % 3];
        let n = 2 + trial % 6;
        let alpha = r.gen_range(0.3..3.0);
        let (a, q) = structured(&mut r, n, shape);
        let exact = naive_ratio(&a, &q, alpha);
        let structure = match shape {
            Shape::Diagonal => Structure::Diagonal,
            Shape::Constant => Structure::Constant,
            Shape::Blocks => Structure::BlockConstant,
        };
        let closed = closed_form_ratio_for_column(&square(&a), &q, alpha, structure).unwrap();
        assert!(rel_err(closed, exact) <= 1e-10, "{shape:?} n={n}");
        for k in 2..=3 {
            let v = approx_ratio(&a, &q, alpha, k);
            assert!(rel_err(v, exact) <= 1e-10, "{shape:?} n={n} k={k}: {v} vs {exact}");
        }
        let one = approx_ratio(&a, &q, alpha, 1);
        match shape {
            Shape::Diagonal => assert!(rel_err(one, exact) <= 1e-10),
            _ => assert!(rel_err(one, exact) > 1e-8, "{shape:?}: order one should be inexact"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_constant_closed_form_matches_four_cycle(
        labels in proptest::collection::vec(0usize..3, 2..8),
        levels in proptest::collection::vec(0.2f64..3.0, 3),
        cross in proptest::collection::vec(0.0f64..2.0, 8),
        self_sim in 0.1f64..2.0,
        alpha in 0.1f64..5.0,
    ) {
        let n = labels.len();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if labels[i] == labels[j] { levels[labels[i]] } else { 0.0 }).collect())
            .collect();
        let q = QueryColumn { self_sim, cross: cross[..n].to_vec() };
        let closed = closed_form_ratio_for_column(&square(&a), &q, alpha, Structure::BlockConstant).unwrap();
        for k in 2..=3 {
            let v = approx_ratio(&a, &q, alpha, k);
            prop_assert!(rel_err(v, closed) <= 1e-10, "k={} {} vs {}", k, v, closed);
        }
    }
}

#[test]
fn projection_kernel_sums_to_n_plus_alpha_nu() {
    let mut r = rng(12);
    for trial in 0..10 {
        let ground = 12;
        let nu = 2 + trial % 3;
        // disjoint supports, each carrying a positive unit vector
        let support: Vec<usize> = (0..ground).map(|g| g % nu).collect();
        let mut v = vec![vec![0.0; ground]; nu];
        for g in 0..ground {
            v[support[g]][g] = r.gen_range(0.2..1.0);
        }
        for row in v.iter_mut() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= norm);
        }
        let matrix: Vec<Vec<f64>> = (0..ground)
            .map(|s| (0..ground).map(|u| (0..nu).map(|b| v[b][s] * v[b][u]).sum()).collect())
            .collect();
        let kernel = Kernel::ProjectionMatrix { matrix };
        let n = 3 + trial % 4;
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![(2 * i + trial % 2) as f64]).collect();
        let alpha = r.gen_range(0.3..3.0);
        let table = build_ratio_table(gram(&kernel, &x).unwrap(), Alpha::new(alpha).unwrap(), order(3)).unwrap();
        for k in 1..=3 {
            let total: f64 = (0..ground).map(|t| ratio_approx(&[t as f64], &table, order(k)).unwrap()).sum();
            let norm = total / (n as f64 + alpha * nu as f64);
            assert!((norm - 1.0).abs() <= 1e-10, "k={k}: {norm}");
        }
    }
}

/// Random positive semidefinite nonnegative Gram of size `m` with bandwidth
/// two, scaled to a unit diagonal.
fn banded_gram(r: &mut ChaCha8Rng, m: usize) -> Vec<Vec<f64>> {
    let mut l = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        l[i][i] = 1.0;
        for d in 1..=2 {
            if i >= d {
                l[i][i - d] = r.gen_range(0.0..1.0);
            }
        }
    }
    let a: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| l[i][k] * l[j][k]).sum()).collect())
        .collect();
    let d: Vec<f64> = (0..m).map(|i| a[i][i].sqrt()).collect();
    (0..m).map(|i| (0..m).map(|j| a[i][j] / (d[i] * d[j])).collect()).collect()
}

#[test]
fn banded_errors_shrink_with_order() {
    let mut r = rng(13);
    let mut mean = [0.0; 4];
    let trials = 40;
    for _ in 0..trials {
        let m = r.gen_range(4..=8usize);
        let full = banded_gram(&mut r, m);
        let t = r.gen_range(0..m);
        let rest: Vec<usize> = (0..m).filter(|&i| i != t).collect();
        let a = sub(&full, &rest);
        let q = QueryColumn { self_sim: full[t][t], cross: rest.iter().map(|&i| full[i][t]).collect() };
        let alpha = r.gen_range(0.5..2.0);
        let exact = naive_ratio(&a, &q, alpha);
        for k in 1..=3u8 {
            mean[k as usize] += rel_err(approx_ratio(&a, &q, alpha, k), exact) / trials as f64;
        }
    }
    assert!(mean[3] < mean[2] && mean[2] < mean[1], "{mean:?}");
    assert!(mean[3] < 0.01, "{mean:?}");
}

#[test]
fn ratios_are_positive_and_refine_upward_in_the_centre() {
    let x = gen_triangular(100, 0.0, std::f64::consts::PI, 5).unwrap();
    let table = build_ratio_table(gram(&Kernel::gaussian(1.0), &x).unwrap(), Alpha::new(1.0).unwrap(), order(3)).unwrap();
    for i in 0..=20 {
        let t = -0.5 + i as f64 * 0.05;
        let r: Vec<f64> = (0..=3).map(|k| ratio_approx(&[t], &table, order(k)).unwrap()).collect();
        assert!(r.iter().all(|&v| v > 0.0));
        assert!(r[1] <= r[2] && r[2] <= r[3], "t={t}: {r:?}");
    }
}
