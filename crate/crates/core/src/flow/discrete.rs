//! Discrete energy of a closed polygon and its exact gradient.
//!
//! Nodes are samples of a periodic parametrization at spacing `h = 2π/N`.
//! Derivatives in the parameter come from sixth-order centered stencils,
//! curvature jets from `κ_0 = x'×x''/σ³`, `κ_{a+1} = κ_a'/σ` with `σ = |x'|`,
//! and the energy is `Σ_i (1 + ε P(κ_i)) σ_i h` (periodic trapezoidal rule).

use crate::error::{Error, Result};
use crate::evaluator::CurveDensity;
use serde::Serialize;
use std::f64::consts::PI;

const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2_CENTER: f64 = -49.0 / 18.0;
const D2: [f64; 3] = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

/// Largest magnitude of the second-derivative stencil's symbol, times `h²`.
pub const D2_SPECTRAL_RADIUS: f64 = 6.044444444444444;

/// `-h²` times the symbol of the second-derivative stencil at frequency
/// `w ∈ [0, 2π)`; nonnegative, `≈ w²` for small `w`.
pub fn d2_symbol(w: f64) -> f64 {
    -D2_CENTER - 2.0 * D2.iter().enumerate().map(|(j, c)| c * ((j + 1) as f64 * w).cos()).sum::<f64>()
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Periodic first derivative; the stencil is antisymmetric, so its transpose
/// is its negative.
pub fn d1(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    for i in 0..n {
        let mut acc = 0.0;
        for (j, c) in D1.iter().enumerate() {
            let j = j as isize + 1;
            acc += c * (f[wrap(i as isize + j, n)] - f[wrap(i as isize - j, n)]);
        }
        out[i] = acc / h;
    }
}

/// Periodic second derivative (symmetric stencil).
pub fn d2(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let h2 = h * h;
    for i in 0..n {
        // differences from the center keep the cancellation exact
        let mut acc = 0.0;
        for (j, c) in D2.iter().enumerate() {
            let j = j as isize + 1;
            acc += c * ((f[wrap(i as isize + j, n)] - f[i]) + (f[wrap(i as isize - j, n)] - f[i]));
        }
        out[i] = acc / h2;
    }
}

/// Neumaier summation; line searches compare energies that differ only in
/// the last few digits.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

/// Energy split into its two homogeneous parts:
/// `energy = length + eps * curvature`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub length: f64,
    pub curvature: f64,
    pub max_abs_curvature: f64,
}

/// `∫ 1 + ε|A^k|² ds` on node polygons, with `|A^k|²` taken from the
/// recursion table at `(n, m) = (1, 1)`.
#[derive(Clone, Debug)]
pub struct CurveEnergy {
    pub k: usize,
    pub eps: f64,
    density: CurveDensity,
}

/// Forward-pass intermediates kept for the reverse pass.
struct Tape {
    h: f64,
    xp: Vec<f64>,
    yp: Vec<f64>,
    xpp: Vec<f64>,
    ypp: Vec<f64>,
    sigma: Vec<f64>,
    /// `kappa[a][i]` is the a-th arc-length derivative of curvature at node i.
    kappa: Vec<Vec<f64>>,
    density: Vec<f64>,
}

impl CurveEnergy {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        if !(3..=6).contains(&k) {
            return Err(Error::InvalidArgument(format!("flow supports 3 <= k <= 6, got {k}")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be finite and >= 0, got {eps}")));
        }
        Ok(CurveEnergy {
            k,
            eps,
            density: CurveDensity::new(k)?,
        })
    }

    pub fn density(&self) -> &CurveDensity {
        &self.density
    }

    /// Minimum node count for the stencils at this order.
    pub fn min_nodes(&self) -> usize {
        (4 * self.k).max(16)
    }

    fn check(&self, nodes: &[[f64; 2]]) -> Result<()> {
        if nodes.len() < self.min_nodes() {
            return Err(Error::InvalidState(format!(
                "{} nodes, need at least {} for k = {}",
                nodes.len(),
                self.min_nodes(),
                self.k
            )));
        }
        if nodes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite node coordinate".into()));
        }
        Ok(())
    }

    fn forward(&self, nodes: &[[f64; 2]]) -> Result<Tape> {
        self.check(nodes)?;
        let n = nodes.len();
        let h = 2.0 * PI / n as f64;
        let x: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
        let mut t = Tape {
            h,
            xp: vec![0.0; n],
            yp: vec![0.0; n],
            xpp: vec![0.0; n],
            ypp: vec![0.0; n],
            sigma: vec![0.0; n],
            kappa: Vec::new(),
            density: vec![0.0; n],
        };
        d1(&x, h, &mut t.xp);
        d1(&y, h, &mut t.yp);
        d2(&x, h, &mut t.xpp);
        d2(&y, h, &mut t.ypp);
        for i in 0..n {
            t.sigma[i] = t.xp[i].hypot(t.yp[i]);
            if t.sigma[i] <= 0.0 {
                return Err(Error::InvalidState(format!("zero speed at node {i}")));
            }
        }
        let k0: Vec<f64> = (0..n)
            .map(|i| (t.xp[i] * t.ypp[i] - t.yp[i] * t.xpp[i]) / t.sigma[i].powi(3))
            .collect();
        t.kappa.push(k0);
        let mut buf = vec![0.0; n];
        for a in 1..self.density.vars {
            d1(&t.kappa[a - 1], h, &mut buf);
            t.kappa.push(buf.iter().zip(&t.sigma).map(|(d, s)| d / s).collect());
        }
        let mut jets = vec![0.0; self.density.vars];
        for i in 0..n {
            for (a, j) in jets.iter_mut().enumerate() {
                *j = t.kappa[a][i];
            }
            t.density[i] = self.density.eval(&jets);
        }
        Ok(t)
    }

    fn report(&self, t: &Tape) -> EnergyReport {
        let length = compensated_sum(t.sigma.iter().copied()) * t.h;
        let curvature = compensated_sum(t.sigma.iter().zip(&t.density).map(|(s, p)| s * p)) * t.h;
        EnergyReport {
            energy: length + self.eps * curvature,
            length,
            curvature,
            max_abs_curvature: t.kappa[0].iter().map(|k| k.abs()).fold(0.0, f64::max),
        }
    }

    pub fn energy(&self, nodes: &[[f64; 2]]) -> Result<EnergyReport> {
        Ok(self.report(&self.forward(nodes)?))
    }

    /// Curvature `κ` at each node.
    pub fn curvature(&self, nodes: &[[f64; 2]]) -> Result<Vec<f64>> {
        Ok(self.forward(nodes)?.kappa.swap_remove(0))
    }

    /// Energy and its exact gradient with respect to the node positions
    /// (reverse pass through the forward evaluation).
    pub fn gradient(&self, nodes: &[[f64; 2]], grad: &mut [[f64; 2]]) -> Result<EnergyReport> {
        Ok(self.gradient_tape(nodes, grad)?.0)
    }

    /// Normal part of the gradient-flow velocity `-∇E / (σ h)`: the nodes
    /// move along `N = (-y', x')/σ` only.
    pub fn normal_velocity(&self, nodes: &[[f64; 2]], out: &mut [[f64; 2]]) -> Result<EnergyReport> {
        let (report, t) = self.gradient_tape(nodes, out)?;
        for (i, v) in out.iter_mut().enumerate() {
            let s = t.sigma[i];
            let normal = [-t.yp[i] / s, t.xp[i] / s];
            let speed = -(v[0] * normal[0] + v[1] * normal[1]) / (s * t.h);
            *v = [speed * normal[0], speed * normal[1]];
        }
        Ok(report)
    }

    /// Gradient together with the unit normals `(-y', x')/σ` of the stencil
    /// tangent at each node.
    pub fn gradient_with_normals(
        &self,
        nodes: &[[f64; 2]],
        grad: &mut [[f64; 2]],
        normals: &mut [[f64; 2]],
    ) -> Result<EnergyReport> {
        let (report, t) = self.gradient_tape(nodes, grad)?;
        for (i, m) in normals.iter_mut().enumerate() {
            *m = [-t.yp[i] / t.sigma[i], t.xp[i] / t.sigma[i]];
        }
        Ok(report)
    }

    fn gradient_tape(&self, nodes: &[[f64; 2]], grad: &mut [[f64; 2]]) -> Result<(EnergyReport, Tape)> {
        let t = self.forward(nodes)?;
        let n = nodes.len();
        let (h, eps) = (t.h, self.eps);
        let vars = self.density.vars;

        let mut sigma_bar: Vec<f64> = t.density.iter().map(|p| h * (1.0 + eps * p)).collect();
        let mut kappa_bar = vec![vec![0.0; n]; vars];
        let mut jets = vec![0.0; vars];
        let mut dp = vec![0.0; vars];
        for i in 0..n {
            for (a, j) in jets.iter_mut().enumerate() {
                *j = t.kappa[a][i];
            }
            self.density.grad(&jets, &mut dp);
            let w = eps * h * t.sigma[i];
            for a in 0..vars {
                kappa_bar[a][i] = w * dp[a];
            }
        }

        let mut tbar = vec![0.0; n];
        let mut back = vec![0.0; n];
        for a in (1..vars).rev() {
            for i in 0..n {
                tbar[i] = kappa_bar[a][i] / t.sigma[i];
                sigma_bar[i] -= kappa_bar[a][i] * t.kappa[a][i] / t.sigma[i];
            }
            d1(&tbar, h, &mut back);
            for i in 0..n {
                kappa_bar[a - 1][i] -= back[i];
            }
        }

        let mut xp_bar = vec![0.0; n];
        let mut yp_bar = vec![0.0; n];
        let mut xpp_bar = vec![0.0; n];
        let mut ypp_bar = vec![0.0; n];
        for i in 0..n {
            let s = t.sigma[i];
            let c_bar = kappa_bar[0][i] / s.powi(3);
            sigma_bar[i] -= 3.0 * kappa_bar[0][i] * t.kappa[0][i] / s;
            xp_bar[i] = c_bar * t.ypp[i] + sigma_bar[i] * t.xp[i] / s;
            yp_bar[i] = -c_bar * t.xpp[i] + sigma_bar[i] * t.yp[i] / s;
            ypp_bar[i] = c_bar * t.xp[i];
            xpp_bar[i] = -c_bar * t.yp[i];
        }
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for (axis, (p_bar, pp_bar)) in [(&xp_bar, &xpp_bar), (&yp_bar, &ypp_bar)].into_iter().enumerate() {
            d1(p_bar, h, &mut a);
            d2(pp_bar, h, &mut b);
            for i in 0..n {
                grad[i][axis] = b[i] - a[i];
            }
        }
        Ok((self.report(&t), t))
    }

    /// Per-node arc-length weights `σ_i h`.
    pub fn weights(&self, nodes: &[[f64; 2]]) -> Result<Vec<f64>> {
        let t = self.forward(nodes)?;
        Ok(t.sigma.iter().map(|s| s * t.h).collect())
    }

    /// Upper estimate of the stiffest eigenvalue of the flow at mean node
    /// spacing `ds`.
    pub fn stiffness(&self, ds: f64) -> f64 {
        let l2 = D2_SPECTRAL_RADIUS / (ds * ds);
        l2 + 2.0 * self.k as f64 * self.eps * l2.powi(self.k as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let u = 2.0 * PI * i as f64 / n as f64;
                [r * u.cos(), r * u.sin()]
            })
            .collect()
    }

    #[test]
    fn stencils_are_sixth_order() {
        let n = 64;
        let h = 2.0 * PI / n as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        d1(&f, h, &mut a);
        d2(&f, h, &mut b);
        for i in 0..n {
            let u = i as f64 * h;
            assert!((a[i] - u.cos()).abs() < 1e-8, "d1 {} {}", a[i], u.cos());
            assert!((b[i] + u.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_energy_k3() {
        let e = CurveEnergy::new(3, 0.5).unwrap();
        let r = e.energy(&circle(2.0, 256)).unwrap();
        let exact = 2.0 * PI * 2.0 + 6.0 * PI * 0.5 / 2.0;
        assert!((r.energy - exact).abs() < 1e-6, "{} vs {exact}", r.energy);
        assert!((r.max_abs_curvature - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_meshes() {
        let e = CurveEnergy::new(5, 1.0).unwrap();
        assert!(matches!(e.energy(&circle(1.0, 16)), Err(Error::InvalidState(_))));
        assert!(CurveEnergy::new(7, 1.0).is_err());
    }
}
