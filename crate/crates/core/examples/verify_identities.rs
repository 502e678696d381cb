//! Checks the projection identities and compares |A^k|^2 from the recursion
//! with finite differences of the squared distance.
//!
//!     cargo run --release --example verify_identities -- ellipse:a=2,b=1 5 8
use distance_jets::evaluator::oracle::verify_identities;
use distance_jets::geometry::Immersion;

fn main() -> distance_jets::Result<()> {
    let mut args = std::env::args().skip(1);
    let shape: Immersion = args.next().unwrap_or_else(|| "ellipse:a=2,b=1".into()).parse()?;
    let k_max: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let report = verify_identities(&shape, k_max, samples, 1e-4)?;

    let p = &report.prop1;
    println!("{shape}: {samples} points");
    println!("  grad A = projection        {:.3e}", p.grad_a_projection);
    println!("  Hess A = tangent proj.     {:.3e}", p.hessian_tangent_projection);
    println!("  B from A                   {:.3e}", p.b_from_a);
    println!("  A3 from B                  {:.3e}", p.a3_from_b);
    println!("  H = trace A3               {:.3e}", p.mean_curvature_trace);
    for s in &report.oracle.per_k {
        println!(
            "  k={}: components {:.3e}, norm {:.3e}, asymmetry {:.1e}",
            s.k, s.max_component_rel_err, s.max_norm_rel_err, s.max_asymmetry
        );
    }
    if let Some(first) = report.oracle.points.iter().rev().find(|pt| pt.k == k_max) {
        println!("  |A^{k_max}|^2 at u={:?}: {:.8} (FD {:.8})", first.param, first.norm_evaluator, first.norm_fd);
    }
    for f in report.prop1.failures.iter().chain(&report.oracle.failures) {
        println!("  failure: {f}");
    }
    println!("passed at 1e-4: {}", report.passed);
    Ok(())
}
