// Compares the cyclic approximation orders on a triangular sample.

use permclass::bench::{accuracy_study, AccuracyConfig};

fn main() -> permclass::Result<()> {
    let report = accuracy_study(&AccuracyConfig::default())?;
    println!("central R3/R2 = {:.4}", report.central_four_over_three);
    println!("central R2/R1 = {:.4}", report.central_three_over_two);
    println!("gap 2-3 = {:.4}  gap 3-4 = {:.4}", report.gap_two_three, report.gap_three_four);
    println!("exact n={} mean rel err {:?} max {:?}", report.exact.n, report.exact.mean_rel_err, report.exact.max_rel_err);
    for (name, c) in [("separated", &report.separated), ("overlapped", &report.overlapped)] {
        let mid = c.t.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        println!(
            "{name}: max abs diff {:.4}, rel vs four {:?}, p1(t~0) = {:.4}",
            c.max_abs_diff, c.max_rel_diff_vs_four, c.p_class1[2][mid]
        );
    }
    println!("elapsed {:.2}s", report.elapsed_secs);
    Ok(())
}
