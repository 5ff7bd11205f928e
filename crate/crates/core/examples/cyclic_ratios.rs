// Cyclic approximations of the permanent ratio against exact enumeration.

use permclass::cyclic::{build_ratio_table, cyclic_ratio_approx, ratio_approx, ApproxOrder};
use permclass::datasets::gen_triangular;
use permclass::kernel::{gram, Kernel};
use permclass::permanent::{cyclic_ratio_exact, ratio_exact, Alpha};

fn main() -> permclass::Result<()> {
    let kernel = Kernel::gaussian(1.0);
    let x = gen_triangular(9, 0.0, std::f64::consts::PI, 3)?;
    let g = gram(&kernel, &x)?;
    let table = build_ratio_table(g.clone(), Alpha::new(1.0)?, ApproxOrder::FOUR_CYCLE)?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "exact", "R0", "R1", "R2", "R3");
    for t in [-2.0, -1.0, 0.0, 0.5, 1.5] {
        let exact = ratio_exact(&[t], &x, &kernel, 1.0)?;
        let approx: Vec<String> = ApproxOrder::all()
            .into_iter()
            .map(|k| ratio_approx(&[t], &table, k).map(|v| format!("{v:>10.5}")))
            .collect::<permclass::Result<_>>()?;
        println!("{t:>6.2} {exact:>10.5} {}", approx.join(" "));
    }

    // the cyclic ratio is dominated by long cycles in a tight cluster, so low
    // orders undershoot it badly here
    let t = [0.25];
    let exact = cyclic_ratio_exact(&t, &x, &kernel)?;
    for k in ApproxOrder::all() {
        let v = cyclic_ratio_approx(&t, &g, k)?;
        println!("cyclic order {}: {v:.5} (exact {exact:.5})", k.get());
    }
    Ok(())
}
