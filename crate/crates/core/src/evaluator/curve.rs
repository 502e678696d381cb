//! Plane curves: `|A^k|^2` as an exact polynomial in `κ, κ', κ'', ...`.

use super::{CompiledNorm, JetSample, Ring};
use crate::error::{Error, Result};
use crate::recursion::RecursionTable;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Polynomial with rational coefficients in `κ_0 = κ, κ_1 = κ', ...`.
/// Exponent vectors carry no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Vec<u8>, Rational64>,
}

fn trim(mut e: Vec<u8>) -> Vec<u8> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl Poly {
    pub fn constant(c: Rational64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    /// The variable `κ_i` (the `i`-th arc-length derivative of curvature).
    pub fn var(i: usize) -> Self {
        let mut e = vec![0u8; i + 1];
        e[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(e, Rational64::from_integer(1));
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Rational64) -> Self {
        Poly::from_iter(self.terms.iter().map(|(e, v)| (e.clone(), v * c)))
    }

    fn from_iter(it: impl IntoIterator<Item = (Vec<u8>, Rational64)>) -> Self {
        let mut terms: BTreeMap<Vec<u8>, Rational64> = BTreeMap::new();
        for (e, c) in it {
            *terms.entry(trim(e)).or_insert_with(Rational64::zero) += c;
        }
        terms.retain(|_, c| !c.is_zero());
        Poly { terms }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(&other.scale(Rational64::from_integer(-1)));
        out
    }

    /// Partial derivative with respect to `κ_i`.
    pub fn partial(&self, i: usize) -> Poly {
        Poly::from_iter(self.terms.iter().filter_map(|(e, c)| {
            let p = *e.get(i)?;
            if p == 0 {
                return None;
            }
            let mut e = e.clone();
            e[i] -= 1;
            Some((e, c * Rational64::from_integer(p as i64)))
        }))
    }

    /// Arc-length derivative, using `d κ_i / ds = κ_{i+1}`.
    pub fn d_ds(&self) -> Poly {
        let nvars = self.nvars();
        let mut out = Poly::default();
        for i in 0..nvars {
            out.add_assign(&self.partial(i).mul(&Poly::var(i + 1)));
        }
        out
    }

    pub fn nvars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exponents: &[u8]) -> Rational64 {
        self.terms
            .get(&trim(exponents.to_vec()))
            .copied()
            .unwrap_or_else(Rational64::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Rational64)> {
        self.terms.iter()
    }
}

impl Ring for Poly {
    fn zero() -> Self {
        Poly::default()
    }
    fn from_rational(r: Rational64) -> Self {
        Poly::constant(r)
    }
    fn add_assign(&mut self, other: &Self) {
        for (e, c) in &other.terms {
            let entry = self.terms.entry(e.clone()).or_insert_with(Rational64::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(e);
            }
        }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn mul(&self, other: &Self) -> Self {
        Poly::from_iter(self.terms.iter().flat_map(|(ea, ca)| {
            other.terms.iter().map(move |(eb, cb)| {
                let len = ea.len().max(eb.len());
                let e: Vec<u8> = (0..len)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                (e, ca * cb)
            })
        }))
    }
}

impl fmt::Display for Poly {
    /// Variables print as `k0` (curvature), `k1` (its first derivative), ...
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest total degree first
        let mut entries: Vec<_> = self.terms.iter().collect();
        entries.sort_by_key(|(e, _)| std::cmp::Reverse(e.iter().map(|&x| x as u32).sum::<u32>()));
        for (e, c) in entries {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*k{i}")?,
                    _ => write!(f, "*k{i}^{p}")?,
                }
            }
        }
        Ok(())
    }
}

/// Symbolic frame jets of a unit-speed plane curve: with `N` the tangent
/// rotated by a quarter turn and `B = κN`, `D^a B = f_a N + g_a T` where
/// `f_{a+1} = f_a' + κ g_a` and `g_{a+1} = g_a' - κ f_a`.
pub fn curve_jets(a_max: usize) -> JetSample<Poly> {
    let mut f = Poly::var(0);
    let mut g = Poly::default();
    let mut bjets = Vec::with_capacity(a_max + 1);
    for _ in 0..=a_max {
        bjets.push(vec![g.clone(), f.clone()]);
        let kappa = Poly::var(0);
        let f_next = {
            let mut t = f.d_ds();
            t.add_assign(&kappa.mul(&g));
            t
        };
        let g_next = g.d_ds().sub(&kappa.mul(&f));
        f = f_next;
        g = g_next;
    }
    JetSample { n: 1, m: 1, bjets }
}

/// `|A^k|^2` of a plane curve as a polynomial in the curvature jets,
/// plus a fast floating-point form for the flow.
#[derive(Clone, Debug)]
pub struct CurveDensity {
    pub k: usize,
    pub poly: Poly,
    /// Number of jet variables `κ_0..κ_{vars-1}` (`k - 2` for `k >= 3`).
    pub vars: usize,
    monomials: Vec<(f64, Vec<u8>)>,
}

impl CurveDensity {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("density needs k >= 2, got {k}")));
        }
        let table = RecursionTable::filled_to(k)?;
        Self::from_table(&table, k)
    }

    pub fn from_table(table: &RecursionTable, k: usize) -> Result<Self> {
        let expr = table.squared_norm_expr(k)?;
        let a_max = k.saturating_sub(3);
        let poly = CompiledNorm::<Poly>::new(&expr, 1, 1).evaluate(&curve_jets(a_max))?;
        let vars = (a_max + 1).max(poly.nvars());
        let monomials = poly
            .terms()
            .map(|(e, c)| {
                let mut e = e.clone();
                e.resize(vars, 0);
                (c.to_f64().expect("finite coefficient"), e)
            })
            .collect();
        Ok(CurveDensity { k, poly, vars, monomials })
    }

    /// Density at jets `κ_0..κ_{vars-1}`.
    pub fn eval(&self, jets: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|(c, e)| c * e.iter().zip(jets).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Partial derivatives with respect to each jet variable.
    pub fn grad(&self, jets: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (c, e) in &self.monomials {
            for i in 0..self.vars {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (&p, &x)) in e.iter().zip(jets).enumerate() {
                    let p = if j == i { p - 1 } else { p };
                    term *= x.powi(p as i32);
                }
                out[i] += term;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn low_order_densities() {
        let d2 = CurveDensity::new(2).unwrap();
        assert_eq!(d2.poly, Poly::constant(r(1)));
        let d3 = CurveDensity::new(3).unwrap();
        assert_eq!(d3.poly, Poly::var(0).mul(&Poly::var(0)).scale(r(3)));
        let d4 = CurveDensity::new(4).unwrap();
        assert_eq!(d4.poly.coefficient(&[4]), r(33));
        assert_eq!(d4.poly.coefficient(&[0, 2]), r(4));
        assert_eq!(d4.poly.terms().count(), 2);
    }

    #[test]
    fn gradient_matches_polynomial_partials() {
        let d = CurveDensity::new(5).unwrap();
        let x = [0.7, -0.3, 1.1];
        let mut g = vec![0.0; d.vars];
        d.grad(&x, &mut g);
        let h = 1e-6;
        for i in 0..d.vars {
            let mut p = x;
            p[i] += h;
            let mut q = x;
            q[i] -= h;
            let fd = (d.eval(&p) - d.eval(&q)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn frenet_jets() {
        let j = curve_jets(1);
        // D^1 B = κ' N - κ^2 T
        assert_eq!(j.bjets[1][1], Poly::var(1));
        assert_eq!(j.bjets[1][0], Poly::var(0).mul(&Poly::var(0)).scale(r(-1)));
    }
}
