// Exact alpha-permanents, the cycle polynomial, and label probabilities.

use permclass::kernel::{gram, Kernel, SquareMatrix};
use permclass::permanent::{label_probability_exact, ExactEngine};

fn main() -> permclass::Result<()> {
    let engine = ExactEngine::default();
    let ones = SquareMatrix::filled(3, 1.0);
    println!("per_1(J_3) = {}", engine.per_alpha(&ones, 1.0)?);
    println!("per_-1(J_3) = {} since J_3 is singular", engine.per_alpha(&ones, -1.0)?);

    let a = SquareMatrix::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.4], vec![0.2, 0.4, 1.0]])?;
    // coefficient j counts permutations with j cycles
    let poly = engine.cycle_polynomial(&a)?;
    println!("cycle polynomial {poly:?}");
    for alpha in [0.5, 1.0, 2.0] {
        let direct = engine.per_alpha(&a, alpha)?;
        let via_poly: f64 = poly.iter().enumerate().map(|(j, c)| c * alpha.powi(j as i32)).sum();
        println!("alpha={alpha}: per = {direct:.6}, from polynomial {via_poly:.6}");
    }
    println!("cyp = {}", engine.cyp(&a)?);

    let x = vec![vec![0.0], vec![0.3], vec![2.0], vec![2.4]];
    let kernel = Kernel::gaussian(1.0);
    let g = gram(&kernel, &x)?;
    for labels in [[0, 0, 1, 1], [0, 1, 0, 1], [0, 0, 0, 0]] {
        let p = label_probability_exact(&x, &labels, &[1.0, 1.0], &kernel)?;
        let q = engine.label_probability(g.entries(), &labels, &[1.0, 1.0])?;
        println!("labels {labels:?}: p = {p:.5} ({q:.5})");
    }
    Ok(())
}
