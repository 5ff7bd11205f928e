// The open-ended model: seat points one at a time into blocks.

use permclass::classifier::{predict_infinite, sequential_partition, AssignRule, Method, ModelParams};
use permclass::kernel::Kernel;
use permclass::permanent::Partition;

fn main() -> permclass::Result<()> {
    // three loose clusters on a line
    let x: Vec<Vec<f64>> = [0.0, 0.2, 0.1, 5.0, 5.3, 10.0, 0.3, 5.1, 10.2]
        .iter()
        .map(|&v| vec![v])
        .collect();
    let params = ModelParams::new(Kernel::gaussian(1.0), 1.0, Method::default())?.with_lambda(0.5);

    let greedy = sequential_partition(&x, &params, AssignRule::Argmax)?;
    println!("argmax seating: {:?}", greedy.labels());
    for seed in 0..3 {
        let p = sequential_partition(&x, &params, AssignRule::Sample(seed))?;
        println!("sampled (seed {seed}): {:?}", p.labels());
    }

    // constant kernel: n_b / (n + lambda) for old blocks, lambda / (n + lambda) new
    let crp = ModelParams::new(Kernel::constant(1.0), 1.0, Method::default())?.with_lambda(1.0);
    let p = Partition::from_labels(&[0, 0, 0, 1]);
    let row = predict_infinite(&x[..4], &p, &[3.0], &crp)?;
    println!("restaurant weights {:?}", row.probs);
    Ok(())
}
