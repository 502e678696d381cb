//! Relaxes circles that start inside and outside the critical radius and
//! compares where descent settles with the closed-form stationary radius.
//!
//!     cargo run --release --example flow_circle
use distance_jets::flow::{run, FlowConfig};
use distance_jets::geometry::Immersion;

fn main() -> distance_jets::Result<()> {
    println!("{:>2} {:>5} {:>5} {:>12} {:>12} {:>6} {:>10}", "k", "eps", "R0", "R_final", "R_crit", "steps", "stop");
    for (k, eps) in [(3, 1.0), (3, 0.1), (4, 1.0)] {
        let r_crit = critical_radius(k, eps);
        for r0 in [0.5 * r_crit, 2.0 * r_crit] {
            let config = FlowConfig { k, eps, nodes: 64, ..FlowConfig::default() };
            let traj = run(&config.initial_state(&Immersion::circle(r0))?, &config)?;
            println!(
                "{k:>2} {eps:>5} {r0:>5.2} {:>12.8} {:>12.8} {:>6} {:>10?}",
                traj.last().radius_fit(),
                r_crit,
                traj.steps,
                traj.stop
            );
        }
    }
    Ok(())
}

/// Stationary radius of 2 pi R (1 + eps c_k / R^(2k-4)), with c_3 = 3 and c_4 = 33.
fn critical_radius(k: usize, eps: f64) -> f64 {
    let c = match k {
        3 => 3.0,
        4 => 33.0,
        _ => unimplemented!("closed form only for k = 3, 4"),
    };
    let p = (2 * k - 4) as f64;
    ((p - 1.0) * eps * c).powf(1.0 / p)
}
