// Choose kernel family, tau and alpha by k-fold cross-validation.

use permclass::classifier::Method;
use permclass::datasets::gen_chequerboard;
use permclass::kernel::Kernel;
use permclass::model_select::{cross_validate, grid, CVSpec, Objective};

fn main() -> permclass::Result<()> {
    let data = gen_chequerboard(10, 3);
    let candidates = grid(
        &[Kernel::exponential(1.0), Kernel::gaussian(1.0)],
        &[0.25, 0.5, 1.0],
        &[0.5, 1.0],
        Method::default(),
    )?;
    let mut spec = CVSpec::new(candidates, Objective::CrossEntropy, 11);
    spec.folds = 5;
    let report = cross_validate(&data, &spec)?;
    for c in &report.candidates {
        let mean = c.mean.map_or("failed".to_string(), |m| format!("{m:.4}"));
        println!("{:<12} tau={:<5} alpha={:<4} {mean}", c.params.kernel.family(), c.params.kernel.tau().unwrap_or(f64::NAN), c.params.alpha_for(0).get());
    }
    if let Some(w) = report.winner_params() {
        println!("winner: {} tau={:?} alpha={}", w.kernel.family(), w.kernel.tau(), w.alpha_for(0).get());
    }
    Ok(())
}
