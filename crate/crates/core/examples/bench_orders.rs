// Timing of table construction and queries per approximation order, with
// log-log slopes in n.

use permclass::bench::{bench_orders, BenchConfig};

fn main() -> permclass::Result<()> {
    let config = BenchConfig {
        sizes: vec![50, 100, 200],
        repeats: 2,
        queries: 5,
        ..Default::default()
    };
    let report = bench_orders(&config)?;
    for r in &report.rows {
        println!("n={:<4} order {} table {:.2e}s query {:.2e}s", r.n, r.order, r.table_secs, r.median_query_secs);
    }
    for (k, s) in &report.slopes {
        println!("order {k}: slope {s:.2}");
    }
    Ok(())
}
