// Structured kernels where the approximations are exact: diagonal,
// constant, and block-constant training matrices.

use permclass::cyclic::{build_ratio_table, closed_form_ratio, ratio_approx, ApproxOrder, Structure};
use permclass::kernel::{gram, Kernel};
use permclass::permanent::{ratio_exact, Alpha};

fn main() -> permclass::Result<()> {
    let alpha = 1.5;
    let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
    let t = [2.5];

    let c = 0.8;
    let kernel = Kernel::constant(c);
    let g = gram(&kernel, &x)?;
    println!("constant: closed form {} = c(alpha+n) = {}", closed_form_ratio(&t, &g, alpha, Structure::Constant)?, c * (alpha + 6.0));

    // block-constant over index points 0..7, the last one is the query
    let blocks = [0usize, 0, 1, 1, 1, 2, 1];
    let levels = [1.0, 0.6, 2.0];
    let matrix: Vec<Vec<f64>> = (0..7)
        .map(|i| (0..7).map(|j| if blocks[i] == blocks[j] { levels[blocks[i]] } else { 0.0 }).collect())
        .collect();
    let kernel = Kernel::ProjectionMatrix { matrix };
    let g = gram(&kernel, &x)?;
    let q = [6.0];
    let exact = ratio_exact(&q, &x, &kernel, alpha)?;
    let closed = closed_form_ratio(&q, &g, alpha, Structure::BlockConstant)?;
    let table = build_ratio_table(g, Alpha::new(alpha)?, ApproxOrder::FOUR_CYCLE)?;
    println!("block-constant: exact {exact:.10} closed {closed:.10}");
    for k in ApproxOrder::all() {
        println!("  order {}: {:.10}", k.get(), ratio_approx(&q, &table, k)?);
    }
    Ok(())
}
