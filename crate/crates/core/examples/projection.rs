//! Projects points near a torus onto it and prints the foot point and the
//! squared distance, then checks that grad A reproduces the foot point.
//!
//!     cargo run --release --example projection
use distance_jets::geometry::{DistanceField, Immersion};

fn main() -> distance_jets::Result<()> {
    let df = DistanceField::new(Immersion::torus3(2.0, 0.5));
    println!("torus3:R=2,r=0.5, tubular half-width {:.3}", df.half_width);
    for x in [[2.3, 0.1, 0.2], [0.0, -2.2, -0.3], [1.2, 1.2, 0.35]] {
        let p = df.project(&x)?;
        let grad = df.fd_grad_a(&x, 1e-3)?;
        let gap = grad.iter().zip(&p.foot).map(|(g, f)| (g - f).abs()).fold(0.0, f64::max);
        println!(
            "x = {x:?}\n  foot {:.6?}  eta {:.6e}  param {:.4?}  |grad A - foot| {gap:.1e}",
            p.foot, p.eta, p.param
        );
    }
    Ok(())
}
