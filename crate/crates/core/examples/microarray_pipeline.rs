// Gene ranking and classification on synthetic expression data, repeated
// over random train/test splits.

use permclass::datasets::{gen_expression, rank_genes_bw, SyntheticExpression};
use permclass::experiments::{run_microarray, MicroarrayConfig};

fn main() -> permclass::Result<()> {
    let (expr, planted) = gen_expression(&SyntheticExpression { seed: 2, ..Default::default() })?;
    let top: Vec<usize> = rank_genes_bw(&expr)?.iter().take(8).map(|g| g.index).collect();
    println!("planted {planted:?}, top ranked {top:?}");

    let mut config = MicroarrayConfig::default().with_seed(2);
    config.plan.repetitions = 20;
    config.gene_counts = vec![1, 5, 50, 200];
    let report = run_microarray(&config)?;
    for curve in &report.curves {
        println!("{:<24} {:?}", curve.method, curve.mean_errors);
    }
    println!("u-shaped: {:?}", report.is_u_shaped());
    Ok(())
}
