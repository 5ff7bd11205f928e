// The chequerboard comparison: permanental classifiers with both kernel
// families against k-nearest neighbours.

use permclass::experiments::{run_table1, Table1Config};

fn main() -> permclass::Result<()> {
    let config = Table1Config { seed: 4, folds: 5, ..Default::default() };
    let report = run_table1(&config)?;
    print!("{}", report.to_csv());
    println!("joint cross-validation picked {:?}", report.selected_family());
    Ok(())
}
