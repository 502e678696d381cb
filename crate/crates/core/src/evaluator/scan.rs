use super::{CompiledNorm, JetSample};
use crate::error::{Error, Result};
use crate::recursion::{PolyTensor, RecursionTable, SquaredNormExpr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Ratios `|A^k|^2 / |B|^{2k-4}` over random jets with `|B| = 1`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ScanReport {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// Minimum over the same samples with all derivative jets zeroed.
    pub zero_derivative_min_ratio: f64,
    /// Empirical constant: the zero-derivative minimum.
    pub c_hat: f64,
    /// Minimum of the eigenvalue chain bound `[(k-2)!]^2 Σ_j tr((B^j)^{2(k-2)})`.
    pub chain_bound_min: f64,
    /// Samples whose zero-derivative ratio fell below their chain bound.
    pub chain_bound_violations: usize,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.min_ratio > 0.0 && self.zero_derivative_min_ratio > 0.0 && self.chain_bound_violations == 0
    }
}

/// Random generator of sample `i`: one ChaCha stream per sample, so results
/// do not depend on evaluation order.
pub fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn chain_bound(jets: &JetSample, k: usize) -> f64 {
    let (n, d) = (jets.n, jets.ambient_dim());
    let power = 2 * (k - 2);
    let fact: f64 = (1..=(k - 2) as u64).product::<u64>() as f64;
    let mut total = 0.0;
    for l in jets.n..d {
        let b: Vec<f64> = (0..n * n).map(|ij| jets.bjets[0][ij * d + l]).collect();
        let mut p: Vec<f64> = (0..n * n).map(|ij| if ij / n == ij % n { 1.0 } else { 0.0 }).collect();
        for _ in 0..power {
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    next[i * n + j] = (0..n).map(|r| p[i * n + r] * b[r * n + j]).sum();
                }
            }
            p = next;
        }
        total += (0..n).map(|i| p[i * n + i]).sum::<f64>();
    }
    fact * fact * total
}

/// The expression restricted to terms built from bare `B` alone, i.e. its
/// value on jets whose derivatives vanish.
fn derivative_free(expr: &SquaredNormExpr) -> SquaredNormExpr {
    SquaredNormExpr {
        k: expr.k,
        parts: expr
            .parts
            .iter()
            .map(|(w, p)| {
                let terms = p.terms.iter().filter(|t| t.max_order() == 0).cloned();
                (*w, PolyTensor::from_terms(p.k, p.s, terms))
            })
            .collect(),
    }
}

/// Scans `|A^k|^2` over `samples` seeded random jets for fixed `(n, m)`.
pub fn inequality_scan(table: &RecursionTable, k: usize, n: usize, m: usize, samples: usize, seed: u64) -> Result<ScanReport> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("scan needs k >= 3, got {k}")));
    }
    if n == 0 || m == 0 || samples == 0 {
        return Err(Error::InvalidArgument("n, m and samples must be positive".into()));
    }
    let expr = table.squared_norm_expr(k)?;
    let norm = CompiledNorm::new(&expr, n, m);
    let bare_norm = CompiledNorm::new(&derivative_free(&expr), n, m);
    let a_max = k - 3;
    let mut report = ScanReport {
        k,
        n,
        m,
        samples,
        seed,
        min_ratio: f64::INFINITY,
        mean_ratio: 0.0,
        max_ratio: f64::NEG_INFINITY,
        zero_derivative_min_ratio: f64::INFINITY,
        c_hat: 0.0,
        chain_bound_min: f64::INFINITY,
        chain_bound_violations: 0,
    };
    let mut sum = 0.0;
    for i in 0..samples {
        let mut rng = sample_rng(seed, i);
        let jets = JetSample::random(n, m, a_max, &mut rng);
        // |B| = 1, so the ratio is |A^k|^2 itself
        let ratio = norm.evaluate(&jets)?;
        sum += ratio;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        let bare = if a_max == 0 { ratio } else { bare_norm.evaluate(&jets)? };
        report.zero_derivative_min_ratio = report.zero_derivative_min_ratio.min(bare);
        let bound = chain_bound(&jets, k);
        report.chain_bound_min = report.chain_bound_min.min(bound);
        if bare < bound * (1.0 - 1e-12) {
            report.chain_bound_violations += 1;
        }
    }
    report.mean_ratio = sum / samples as f64;
    report.c_hat = report.zero_derivative_min_ratio;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_curves_give_three() {
        let table = RecursionTable::filled_to(3).unwrap();
        let r = inequality_scan(&table, 3, 1, 1, 50, 42).unwrap();
        assert!((r.min_ratio - 3.0).abs() < 1e-12 && (r.max_ratio - 3.0).abs() < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn derivative_free_part_matches_zeroed_jets() {
        let table = RecursionTable::filled_to(5).unwrap();
        let expr = table.squared_norm_expr(5).unwrap();
        let full = CompiledNorm::new(&expr, 2, 1);
        let bare = CompiledNorm::new(&derivative_free(&expr), 2, 1);
        let jets = JetSample::random(2, 1, 2, &mut sample_rng(3, 0));
        let a = full.evaluate(&jets.without_derivatives()).unwrap();
        let b = bare.evaluate(&jets).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn reports_are_deterministic() {
        let table = RecursionTable::filled_to(4).unwrap();
        let a = inequality_scan(&table, 4, 2, 1, 100, 7).unwrap();
        let b = inequality_scan(&table, 4, 2, 1, 100, 7).unwrap();
        assert_eq!(a, b);
        let c = inequality_scan(&table, 4, 2, 1, 100, 8).unwrap();
        assert_ne!(a.min_ratio, c.min_ratio);
    }
}
