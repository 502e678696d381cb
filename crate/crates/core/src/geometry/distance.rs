use super::immersion::Immersion;
use super::taylor::{Taylor, TaylorSpace};
use crate::error::{Error, Result};
use std::cell::RefCell;
use std::collections::HashMap;

/// Squared distance to an immersion, trusted inside a neighborhood of
/// half-width `half_width`.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub source: Immersion,
    pub half_width: f64,
    pub seeds: usize,
}

/// Nearest point on the immersion.
#[derive(Clone, Debug)]
pub struct Projection {
    pub param: Vec<f64>,
    pub foot: Vec<f64>,
    pub eta: f64,
}

/// Finite-difference estimate of `A^k` in ambient coordinates.
#[derive(Clone, Debug)]
pub struct FdTensor {
    pub k: usize,
    pub dim: usize,
    pub h: f64,
    /// Richardson-extrapolated and symmetrized.
    pub data: Vec<f64>,
    /// Raw tensors at steps `h` and `h/2`.
    pub raw_h: Vec<f64>,
    pub raw_h2: Vec<f64>,
    /// Max deviation of the extrapolated tensor from its symmetrization.
    pub asymmetry: f64,
}

impl FdTensor {
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[idx.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Components in the frame `frame` (each entry an ambient unit vector).
    pub fn in_frame(&self, frame: &[Vec<f64>]) -> Vec<f64> {
        let mut t = self.data.clone();
        let d = self.dim;
        // contract one slot at a time
        for slot in 0..self.k {
            let stride = d.pow((self.k - 1 - slot) as u32);
            let mut out = vec![0.0; t.len()];
            for (idx, o) in out.iter_mut().enumerate() {
                let b = (idx / stride) % d;
                let base = idx - b * stride;
                *o = (0..d).map(|alpha| frame[b][alpha] * t[base + alpha * stride]).sum();
            }
            t = out;
        }
        t
    }
}

/// Largest Newton update of a periodic parameter per iteration.
const MAX_PARAM_STEP: f64 = 0.5;

impl DistanceField {
    pub fn new(source: Immersion) -> Self {
        let half_width = source.half_width();
        DistanceField {
            source,
            half_width,
            seeds: 64,
        }
    }

    fn seed_grid(&self) -> Vec<Vec<f64>> {
        let (lo, hi) = self.source.parameter_box();
        let n = self.source.dim();
        let per_axis = if n == 1 {
            self.seeds
        } else {
            (self.seeds as f64).sqrt().round().max(2.0) as usize
        };
        let step = (hi - lo) / per_axis as f64;
        let axis: Vec<f64> = (0..per_axis).map(|i| lo + (i as f64 + 0.5) * step).collect();
        if n == 1 {
            axis.into_iter().map(|a| vec![a]).collect()
        } else {
            axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
        }
    }

    /// Nearest point by Newton on the parameter from the best multistart seeds.
    pub fn project(&self, x: &[f64]) -> Result<Projection> {
        let n = self.source.dim();
        let dist2 = |u: &[f64]| {
            let p = self.source.point(u);
            p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };
        let mut seeds: Vec<(f64, Vec<f64>)> = self.seed_grid().into_iter().map(|u| (dist2(&u), u)).collect();
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let space = TaylorSpace::new(n, 2);
        let mut best: Option<Projection> = None;
        for (_, seed) in seeds.into_iter().take(4) {
            if let Some(u) = self.newton(&space, x, seed) {
                let foot = self.source.point(&u);
                let eta = foot.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                if best.as_ref().is_none_or(|b| eta < b.eta) {
                    best = Some(Projection { param: u, foot, eta });
                }
            }
        }
        best.ok_or_else(|| Error::ProjectionFailed(x.to_vec()))
    }

    fn newton(&self, space: &std::sync::Arc<TaylorSpace>, x: &[f64], mut u: Vec<f64>) -> Option<Vec<f64>> {
        let n = u.len();
        let dist2 = |u: &[f64]| {
            let p = self.source.point(u);
            p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };
        for _ in 0..60 {
            let vars: Vec<Taylor> = (0..n).map(|i| Taylor::variable(space, i, u[i])).collect();
            let phi = self.source.param(&vars);
            let r: Vec<f64> = phi.iter().zip(x).map(|(p, xi)| p.value() - xi).collect();
            let first = |c: &Taylor, i: usize| {
                let mut m = vec![0u8; n];
                m[i] = 1;
                c.derivative_at(&m)
            };
            let second = |c: &Taylor, i: usize, j: usize| {
                let mut m = vec![0u8; n];
                m[i] += 1;
                m[j] += 1;
                c.derivative_at(&m)
            };
            let mut grad = vec![0.0; n];
            let mut hess = vec![vec![0.0; n]; n];
            for (c, ri) in phi.iter().zip(&r) {
                for i in 0..n {
                    let di = first(c, i);
                    grad[i] += ri * di;
                    for j in 0..n {
                        hess[i][j] += di * first(c, j) + ri * second(c, i, j);
                    }
                }
            }
            let mut step = solve_small(&hess, &grad)?;
            let size = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
            if !size.is_finite() {
                return None;
            }
            // an indefinite Hessian away from the foot point can send the
            // raw step uphill or far off: cap it and backtrack on distance
            let descent = step.iter().zip(&grad).map(|(s, g)| s * g).sum::<f64>() > 0.0;
            if !descent {
                step.clone_from(&grad);
            }
            let size = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
            if self.source.is_periodic() && size > MAX_PARAM_STEP {
                step.iter_mut().for_each(|s| *s *= MAX_PARAM_STEP / size);
            }
            let f0: f64 = r.iter().map(|v| v * v).sum();
            let mut scale = 1.0;
            let mut trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a - s).collect();
            while dist2(&trial) > f0 && scale > 1e-6 {
                scale *= 0.5;
                trial = u.iter().zip(&step).map(|(a, s)| a - scale * s).collect();
            }
            let moved = scale * step.iter().map(|s| s.abs()).fold(0.0, f64::max);
            u = trial;
            if moved < 1e-15 * (1.0 + u.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Some(u);
            }
        }
        // converged to roundoff without meeting the strict test
        Some(u)
    }

    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        Ok(self.project(x)?.eta)
    }

    /// `k`-th derivative of `A = (|x|^2 - η)/2` at `x` by nested central
    /// differences of `η` at steps `h` and `h/2`, combined by Richardson
    /// extrapolation.
    pub fn fd_ak(&self, x: &[f64], k: usize, h: f64) -> Result<FdTensor> {
        if !(2..=6).contains(&k) {
            return Err(Error::InvalidArgument(format!("fd_ak supports 2 <= k <= 6, got {k}")));
        }
        let reach = k as f64 * h;
        if reach >= self.half_width {
            return Err(Error::StepTooLarge {
                radius: reach,
                half_width: self.half_width,
            });
        }
        let raw_h = self.nested_difference(x, k, h)?;
        let raw_h2 = self.nested_difference(x, k, h / 2.0)?;
        let extrapolated: Vec<f64> = raw_h.iter().zip(&raw_h2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let d = x.len();
        let sym = symmetrize(&extrapolated, d, k);
        let asymmetry = sym
            .iter()
            .zip(&extrapolated)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(FdTensor {
            k,
            dim: d,
            h,
            data: sym,
            raw_h,
            raw_h2,
            asymmetry,
        })
    }

    /// Raw (non-extrapolated) tensor of `A^k` at step `h`.
    pub fn nested_difference(&self, x: &[f64], k: usize, h: f64) -> Result<Vec<f64>> {
        let d = x.len();
        let cache: RefCell<HashMap<Vec<i32>, f64>> = RefCell::new(HashMap::new());
        let eta_at = |offset: &[i32]| -> Result<f64> {
            if let Some(&v) = cache.borrow().get(offset) {
                return Ok(v);
            }
            let p: Vec<f64> = x.iter().zip(offset).map(|(xi, &o)| xi + o as f64 * h).collect();
            let v = self.eta(&p)?;
            cache.borrow_mut().insert(offset.to_vec(), v);
            Ok(v)
        };
        let total = d.pow(k as u32);
        let mut out = vec![0.0; total];
        let scale = (2.0 * h).powi(k as i32);
        for (idx, o) in out.iter_mut().enumerate() {
            let mut axes = vec![0; k];
            let mut rest = idx;
            for slot in (0..k).rev() {
                axes[slot] = rest % d;
                rest /= d;
            }
            let mut acc = 0.0;
            for signs in 0..(1u32 << k) {
                let mut offset = vec![0i32; d];
                let mut sign = 1.0;
                for (slot, &axis) in axes.iter().enumerate() {
                    if signs >> slot & 1 == 1 {
                        offset[axis] -= 1;
                        sign = -sign;
                    } else {
                        offset[axis] += 1;
                    }
                }
                acc += sign * eta_at(&offset)?;
            }
            // A = (|x|^2 - η)/2 and the quadratic part only reaches k = 2
            *o = -acc / scale / 2.0;
            if k == 2 && axes[0] == axes[1] {
                *o += 1.0;
            }
        }
        Ok(out)
    }

    /// Observed convergence order of the raw stencil from steps `h, h/2, h/4`.
    pub fn observed_order(&self, x: &[f64], k: usize, h: f64) -> Result<f64> {
        let a = self.nested_difference(x, k, h)?;
        let b = self.nested_difference(x, k, h / 2.0)?;
        let c = self.nested_difference(x, k, h / 4.0)?;
        let diff = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
        Ok((diff(&a, &b) / diff(&b, &c)).log2())
    }

    /// Gradient of `A` at `x` by Richardson-extrapolated central differences.
    pub fn fd_grad_a(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        let d = x.len();
        let mut out = vec![0.0; d];
        for (i, o) in out.iter_mut().enumerate() {
            let diff = |step: f64| -> Result<f64> {
                let mut p = x.to_vec();
                p[i] += step;
                let plus = self.eta(&p)?;
                p[i] -= 2.0 * step;
                let minus = self.eta(&p)?;
                Ok((plus - minus) / (2.0 * step))
            };
            let d1 = diff(h)?;
            let d2 = diff(h / 2.0)?;
            let eta_grad = (4.0 * d2 - d1) / 3.0;
            *o = x[i] - eta_grad / 2.0;
        }
        Ok(out)
    }
}

fn solve_small(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    match b.len() {
        1 => {
            if a[0][0].abs() < 1e-300 {
                None
            } else {
                Some(vec![b[0] / a[0][0]])
            }
        }
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.abs() < 1e-300 {
                return None;
            }
            Some(vec![
                (a[1][1] * b[0] - a[0][1] * b[1]) / det,
                (a[0][0] * b[1] - a[1][0] * b[0]) / det,
            ])
        }
        _ => unreachable!("parameter dimension is 1 or 2"),
    }
}

/// Average over all index permutations.
pub fn symmetrize(t: &[f64], d: usize, k: usize) -> Vec<f64> {
    let mut sums: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
    let index = |idx: usize| {
        let mut axes = vec![0; k];
        let mut rest = idx;
        for slot in (0..k).rev() {
            axes[slot] = rest % d;
            rest /= d;
        }
        axes.sort_unstable();
        axes
    };
    for (idx, &v) in t.iter().enumerate() {
        let e = sums.entry(index(idx)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    (0..t.len())
        .map(|idx| {
            let (s, c) = sums[&index(idx)];
            s / c as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_projection_closed_form() {
        let df = DistanceField::new(Immersion::circle(2.0));
        let p = df.project(&[2.7, 0.0]).unwrap();
        assert_relative_eq!(p.eta, 0.49, epsilon = 1e-14);
        assert!(p.foot[1].abs() < 1e-14);
    }

    #[test]
    fn points_on_the_curve_have_zero_eta() {
        let im = Immersion::ellipse(2.0, 1.0);
        let df = DistanceField::new(im.clone());
        for i in 0..10 {
            let x = im.point(&[0.6 * i as f64]);
            let p = df.project(&x).unwrap();
            assert!(p.eta < 1e-24, "eta = {}", p.eta);
        }
    }

    #[test]
    fn unit_circle_third_derivative() {
        let df = DistanceField::new(Immersion::circle(1.0));
        let t = df.fd_ak(&[1.0, 0.0], 3, 0.01).unwrap();
        // A = |x| - 1/2 near the circle (|x| > 0)
        assert_relative_eq!(t.get(&[1, 1, 0]), -1.0, epsilon = 1e-7);
        assert!(t.get(&[1, 1, 1]).abs() < 1e-8);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let df = DistanceField::new(Immersion::circle(1.0));
        assert!(matches!(df.fd_ak(&[1.0, 0.0], 4, 0.2), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn symmetrize_averages_permutations() {
        let t = vec![0.0, 1.0, 3.0, 0.0];
        assert_eq!(symmetrize(&t, 2, 2), vec![0.0, 2.0, 2.0, 0.0]);
    }
}
