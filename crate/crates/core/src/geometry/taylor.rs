//! Truncated multivariate Taylor series ("higher-order dual numbers").
//!
//! A [`Taylor`] holds the coefficients of all monomials of total degree at
//! most `order` in `nvars` variables around an expansion point. Arithmetic
//! is exact up to truncation, so derivatives of analytic parametrizations
//! come out to machine precision.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

#[derive(Debug)]
pub struct TaylorSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(usize, usize, usize)>,
}

impl TaylorSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            enumerate_degree(nvars, degree, 0, &mut current, &mut monomials);
        }
        let index: HashMap<Vec<u8>, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                if let Some(&c) = index.get(&sum) {
                    products.push((a, b, c));
                }
            }
        }
        Arc::new(TaylorSpace {
            nvars,
            order,
            monomials,
            index,
            products,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    fn degree(&self, idx: usize) -> usize {
        self.monomials[idx].iter().map(|&e| e as usize).sum()
    }
}

fn enumerate_degree(nvars: usize, left: usize, var: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if var + 1 == nvars {
        current[var] = left as u8;
        out.push(current.clone());
        return;
    }
    for e in (0..=left).rev() {
        current[var] = e as u8;
        enumerate_degree(nvars, left - e, var + 1, current, out);
    }
    current[var] = 0;
}

/// Truncated Taylor expansion. `valid` tracks the highest degree whose
/// coefficients are still exact after differentiation.
#[derive(Clone, Debug)]
pub struct Taylor {
    space: Arc<TaylorSpace>,
    valid: usize,
    coeffs: Vec<f64>,
}

impl Taylor {
    pub fn constant(space: &Arc<TaylorSpace>, value: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Taylor {
            space: space.clone(),
            valid: space.order,
            coeffs,
        }
    }

    /// The coordinate function `value + (u_var - u0_var)`.
    pub fn variable(space: &Arc<TaylorSpace>, var: usize, value: f64) -> Self {
        let mut t = Taylor::constant(space, value);
        if space.order >= 1 {
            let mut m = vec![0u8; space.nvars];
            m[var] = 1;
            t.coeffs[space.index[&m]] = 1.0;
        }
        t
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn valid_order(&self) -> usize {
        self.valid
    }

    pub fn space(&self) -> &Arc<TaylorSpace> {
        &self.space
    }

    /// Partial derivative `∂^multi f` at the expansion point.
    pub fn derivative_at(&self, multi: &[u8]) -> f64 {
        let idx = self.space.index[multi];
        let factorial: f64 = multi.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product();
        self.coeffs[idx] * factorial
    }

    /// Series of `∂f/∂u_var`; exact through degree `valid - 1`.
    pub fn partial(&self, var: usize) -> Taylor {
        let mut coeffs = vec![0.0; self.space.len()];
        for (idx, m) in self.space.monomials.iter().enumerate() {
            if m[var] == 0 {
                continue;
            }
            let mut lower = m.clone();
            lower[var] -= 1;
            let target = self.space.index[&lower];
            coeffs[target] = self.coeffs[idx] * m[var] as f64;
        }
        let valid = self.valid.saturating_sub(1);
        let mut out = Taylor {
            space: self.space.clone(),
            valid,
            coeffs,
        };
        out.truncate();
        out
    }

    fn truncate(&mut self) {
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            if self.space.degree(idx) > self.valid {
                *c = 0.0;
            }
        }
    }

    pub fn scale(&self, c: f64) -> Taylor {
        Taylor {
            space: self.space.clone(),
            valid: self.valid,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Taylor {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn nilpotent_part(&self) -> Taylor {
        let mut r = self.clone();
        r.coeffs[0] = 0.0;
        r
    }

    /// Σ_i c_i r^i for the nilpotent part r of the series.
    fn compose_power_series(&self, c: impl Fn(usize) -> f64) -> Taylor {
        let r = self.nilpotent_part();
        let mut acc = Taylor::constant(&self.space, c(0));
        acc.valid = self.valid;
        let mut power = Taylor::constant(&self.space, 1.0);
        for i in 1..=self.valid {
            power = &power * &r;
            acc = &acc + &power.scale(c(i));
        }
        acc
    }

    pub fn recip(&self) -> Taylor {
        let a0 = self.value();
        self.compose_power_series(|i| (-1.0f64).powi(i as i32) / a0.powi(i as i32 + 1))
    }

    pub fn sqrt(&self) -> Taylor {
        let a0 = self.value();
        let s0 = a0.sqrt();
        // binomial series of sqrt(a0 + r)
        self.compose_power_series(|i| {
            let mut c = 1.0;
            for j in 0..i {
                c *= (0.5 - j as f64) / (j as f64 + 1.0);
            }
            c * s0 / a0.powi(i as i32)
        })
    }

    pub fn sin(&self) -> Taylor {
        let (s0, c0) = self.value().sin_cos();
        self.compose_power_series(|i| {
            let fact: f64 = (1..=i as u64).product::<u64>() as f64;
            let d = match i % 4 {
                0 => s0,
                1 => c0,
                2 => -s0,
                _ => -c0,
            };
            d / fact
        })
    }

    pub fn cos(&self) -> Taylor {
        let (s0, c0) = self.value().sin_cos();
        self.compose_power_series(|i| {
            let fact: f64 = (1..=i as u64).product::<u64>() as f64;
            let d = match i % 4 {
                0 => c0,
                1 => -s0,
                2 => -c0,
                _ => s0,
            };
            d / fact
        })
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        Taylor {
            space: self.space.clone(),
            valid: self.valid.min(rhs.valid),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        Taylor {
            space: self.space.clone(),
            valid: self.valid.min(rhs.valid),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let valid = self.valid.min(rhs.valid);
        let mut coeffs = vec![0.0; self.space.len()];
        for &(a, b, c) in &self.space.products {
            coeffs[c] += self.coeffs[a] * rhs.coeffs[b];
        }
        let mut out = Taylor {
            space: self.space.clone(),
            valid,
            coeffs,
        };
        out.truncate();
        out
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

/// Minimal scalar interface shared by `f64` and [`Taylor`], so that shape
/// parametrizations are written once.
pub trait Real: Clone {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn add_const(&self, c: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    /// Constant living in the same space as `self`.
    fn lift(&self, c: f64) -> Self;
}

impl Real for f64 {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn add_const(&self, c: f64) -> Self {
        self + c
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
}

impl Real for Taylor {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: f64) -> Self {
        Taylor::scale(self, c)
    }
    fn add_const(&self, c: f64) -> Self {
        Taylor::add_const(self, c)
    }
    fn sin(&self) -> Self {
        Taylor::sin(self)
    }
    fn cos(&self) -> Self {
        Taylor::cos(self)
    }
    fn lift(&self, c: f64) -> Self {
        Taylor::constant(&self.space, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_count() {
        assert_eq!(TaylorSpace::new(2, 3).len(), 10);
        assert_eq!(TaylorSpace::new(1, 5).len(), 6);
        assert_eq!(TaylorSpace::new(3, 2).len(), 10);
    }

    #[test]
    fn sin_cos_derivatives() {
        let space = TaylorSpace::new(1, 6);
        let u = Taylor::variable(&space, 0, 0.7);
        let s = u.sin();
        for d in 0..=6u8 {
            let expect = match d % 4 {
                0 => 0.7f64.sin(),
                1 => 0.7f64.cos(),
                2 => -0.7f64.sin(),
                _ => -0.7f64.cos(),
            };
            assert_relative_eq!(s.derivative_at(&[d]), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_partials_of_product() {
        let space = TaylorSpace::new(2, 4);
        let u = Taylor::variable(&space, 0, 0.3);
        let v = Taylor::variable(&space, 1, -1.1);
        let f = &u.sin() * &v.cos();
        // ∂u ∂v^2 (sin u cos v) = cos u * (-cos v)
        assert_relative_eq!(f.derivative_at(&[1, 2]), -(0.3f64.cos()) * (-1.1f64).cos(), epsilon = 1e-12);
        let g = f.partial(1);
        assert_eq!(g.valid_order(), 3);
        assert_relative_eq!(g.derivative_at(&[1, 1]), -(0.3f64.cos()) * (-1.1f64).cos(), epsilon = 1e-12);
    }

    #[test]
    fn reciprocal_and_sqrt() {
        let space = TaylorSpace::new(1, 5);
        let u = Taylor::variable(&space, 0, 2.0);
        let x = (&u * &u).add_const(1.0); // 1 + u^2
        let inv = x.recip();
        let one = &inv * &x;
        assert_relative_eq!(one.value(), 1.0, epsilon = 1e-14);
        for d in 1..=5u8 {
            assert!(one.derivative_at(&[d]).abs() < 1e-10);
        }
        let r = x.sqrt();
        let sq = &r * &r;
        for d in 0..=5u8 {
            assert_relative_eq!(sq.derivative_at(&[d]), x.derivative_at(&[d]), epsilon = 1e-10);
        }
    }
}
