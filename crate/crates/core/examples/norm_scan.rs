//! Scans |A^k|^2 / |B|^(2k-4) over random jets of the second fundamental
//! form and prints the smallest ratio for each order and dimension pair.
//!
//!     cargo run --release --example norm_scan -- 10000
use distance_jets::evaluator::inequality_scan;
use distance_jets::recursion::RecursionTable;

fn main() -> distance_jets::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let table = RecursionTable::filled_to(6)?;
    println!("{:>2} {:>2} {:>2} {:>14} {:>14} {:>14} {:>8}", "k", "n", "m", "min", "mean", "C_hat", "secs");
    for k in 3..=6 {
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let start = std::time::Instant::now();
            let r = inequality_scan(&table, k, n, m, samples, 42)?;
            println!(
                "{k:>2} {n:>2} {m:>2} {:>14.6e} {:>14.6e} {:>14.6e} {:>8.2}",
                r.min_ratio,
                r.mean_ratio,
                r.c_hat,
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
