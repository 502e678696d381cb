//! Shrinks a unit circle with decreasing eps and measures the distance to
//! curve-shortening flow at the same times.
//!
//!     cargo run --release --example mcf_limit
use distance_jets::flow::{mcf_compare, McfConfig};
use distance_jets::geometry::Immersion;

fn main() -> distance_jets::Result<()> {
    for shape in [Immersion::circle(1.0), Immersion::ellipse(1.2, 1.0)] {
        let config = McfConfig::new(shape, vec![0.1, 0.03, 0.01, 0.003]);
        let report = mcf_compare(&config)?;
        println!("{} against {} up to t = {}", report.shape, report.reference, report.t_end);
        println!("{:>8} {:>14} {:>10} {:>7}", "eps", "deviation", "R_fit", "steps");
        for r in &report.rows {
            println!("{:>8} {:>14.6e} {:>10.6} {:>7}", r.eps, r.deviation, r.final_radius_fit, r.steps);
        }
        println!("monotone: {}\n", report.monotone);
    }
    Ok(())
}
