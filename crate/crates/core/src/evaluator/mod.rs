//! Numerical instantiation of polynomial tensors on jets of the second
//! fundamental form.

mod contract;
pub mod curve;
pub mod oracle;
pub mod scan;

use contract::{Plan, Slot, Var};
use crate::error::{Error, Result};
use crate::geometry::JetData;
use crate::recursion::{FactorKind, Link, PolyTensor, RecursionTable, SquaredNormExpr, Term};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::Rng;

pub use curve::{CurveDensity, Poly};
pub use oracle::{compare_with_fd, evaluator_tensor_in_frame, verify_identities, IdentityReport, OracleReport};
pub use scan::{inequality_scan, ScanReport};

/// Scalars the evaluator can sum products over.
pub trait Ring: Clone {
    fn zero() -> Self;
    fn from_rational(r: Rational64) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_rational(r: Rational64) -> Self {
        r.to_f64().expect("finite rational")
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Components of `D^a B` for `0 <= a <= a_max` in an adapted frame, same
/// layout as [`JetData::bjets`].
#[derive(Clone, Debug, PartialEq)]
pub struct JetSample<R = f64> {
    pub n: usize,
    pub m: usize,
    pub bjets: Vec<Vec<R>>,
}

impl From<&JetData> for JetSample {
    fn from(data: &JetData) -> Self {
        JetSample {
            n: data.n,
            m: data.m,
            bjets: data.bjets.clone(),
        }
    }
}

impl<R> JetSample<R> {
    pub fn ambient_dim(&self) -> usize {
        self.n + self.m
    }

    pub fn a_max(&self) -> usize {
        self.bjets.len().saturating_sub(1)
    }
}

impl JetSample {
    /// Random jets: `B` normal-valued, symmetric and of unit norm; higher
    /// jets uniform in `[-1, 1]`, symmetric in their two base slots.
    pub fn random<G: Rng>(n: usize, m: usize, a_max: usize, rng: &mut G) -> Self {
        let d = n + m;
        let mut bjets = Vec::with_capacity(a_max + 1);
        loop {
            let mut b = vec![0.0; n * n * d];
            for i in 0..n {
                for j in i..n {
                    for l in n..d {
                        let v: f64 = rng.gen_range(-1.0..=1.0);
                        b[(i * n + j) * d + l] = v;
                        b[(j * n + i) * d + l] = v;
                    }
                }
            }
            let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                bjets.push(b.iter().map(|x| x / norm).collect());
                break;
            }
        }
        for a in 1..=a_max {
            let slots = a + 2;
            let count = n.pow(slots as u32);
            let mut t = vec![0.0; count * d];
            for idx in 0..count {
                let (head, i, j) = (idx / (n * n), (idx / n) % n, idx % n);
                if i > j {
                    continue;
                }
                for l in 0..d {
                    let v: f64 = rng.gen_range(-1.0..=1.0);
                    t[idx * d + l] = v;
                    t[((head * n + j) * n + i) * d + l] = v;
                }
            }
            bjets.push(t);
        }
        JetSample { n, m, bjets }
    }

    /// Same bare `B`, all higher jets zero.
    pub fn without_derivatives(&self) -> Self {
        let mut out = self.clone();
        for t in out.bjets.iter_mut().skip(1) {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        out
    }

    pub fn b_norm_sq(&self) -> f64 {
        self.bjets[0].iter().map(|x| x * x).sum()
    }
}

/// Range of the free label positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Labels {
    /// Normal frame vectors only (`n..n+m`).
    Normal,
    /// Whole adapted frame (`0..n+m`).
    Ambient,
}

/// A term lowered to summation variables plus a contraction plan.
#[derive(Clone, Debug)]
struct CompiledTerm<R> {
    coeff: R,
    vars: Vec<Var>,
    plan: Plan,
}

fn compile_term<R: Ring>(term: &Term, k: usize, s: usize, n: usize, m: usize, labels: Labels) -> CompiledTerm<R> {
    let d = n + m;
    let (label_offset, label_range) = match labels {
        Labels::Normal => (n, m),
        Labels::Ambient => (0, d),
    };
    // free variables are fixed by position; labels follow tangents
    let mut vars: Vec<Var> = Vec::new();
    let tangents = s;
    let label_count = k - s;
    let mut out_stride = 1;
    let mut strides = vec![0; tangents + label_count];
    for pos in (0..tangents + label_count).rev() {
        strides[pos] = out_stride;
        out_stride *= if pos < tangents { n } else { label_range };
    }
    for (pos, &st) in strides.iter().enumerate() {
        vars.push(if pos < tangents {
            Var {
                offset: 0,
                range: n,
                out_stride: st,
            }
        } else {
            Var {
                offset: label_offset,
                range: label_range,
                out_stride: st,
            }
        });
    }
    let var_of = |link: Link, bond_vars: &std::collections::HashMap<(usize, usize), usize>, f: usize, slot: usize| match link {
        Link::Tangent(i) => i as usize,
        Link::Label(j) => tangents + j as usize,
        Link::Bond { .. } => bond_vars[&(f, slot)],
    };
    let mut bond_vars = std::collections::HashMap::new();
    for (f, factor) in term.factors.iter().enumerate() {
        for (slot, link) in factor.links.iter().enumerate() {
            if let Link::Bond { factor: g, slot: t } = *link {
                let other = (g as usize, t as usize);
                if bond_vars.contains_key(&other) {
                    let v = bond_vars[&other];
                    bond_vars.insert((f, slot), v);
                    continue;
                }
                let is_label = |ff: usize, ss: usize| {
                    let kind = term.factors[ff].kind;
                    !kind.slot_kind(ss).is_tangent()
                };
                let bare_label = |ff: usize, ss: usize| {
                    term.factors[ff].kind == FactorKind::BJet(0) && is_label(ff, ss)
                };
                let (offset, range) = match (is_label(f, slot), is_label(other.0, other.1)) {
                    (true, true) if bare_label(f, slot) || bare_label(other.0, other.1) => (n, m),
                    (true, true) => (0, d),
                    _ => (0, n),
                };
                vars.push(Var {
                    offset,
                    range,
                    out_stride: 0,
                });
                bond_vars.insert((f, slot), vars.len() - 1);
            }
        }
    }
    let factors: Vec<Slot> = term
        .factors
        .iter()
        .enumerate()
        .map(|(f, factor)| match factor.kind {
            FactorKind::Kronecker => Slot::Delta(
                var_of(factor.links[0], &bond_vars, f, 0),
                var_of(factor.links[1], &bond_vars, f, 1),
            ),
            FactorKind::BJet(a) => {
                let a = a as usize;
                let arity = a + 3;
                let mut slot_strides = vec![0; arity];
                slot_strides[arity - 1] = 1;
                slot_strides[arity - 2] = d;
                for q in (0..arity - 2).rev() {
                    slot_strides[q] = slot_strides[q + 1] * n;
                }
                let mut base = 0;
                let mut per_var: Vec<(usize, usize)> = Vec::new();
                for (slot, &link) in factor.links.iter().enumerate() {
                    let v = var_of(link, &bond_vars, f, slot);
                    base += slot_strides[slot] * vars[v].offset;
                    match per_var.iter_mut().find(|(w, _)| *w == v) {
                        Some(e) => e.1 += slot_strides[slot],
                        None => per_var.push((v, slot_strides[slot])),
                    }
                }
                Slot::Jet {
                    order: a,
                    base,
                    strides: per_var,
                }
            }
        })
        .collect();
    let plan = Plan::new(&vars, &factors, k);
    CompiledTerm {
        coeff: R::from_rational(term.coeff),
        vars,
        plan,
    }
}

impl<R: Ring> CompiledTerm<R> {
    fn accumulate(&self, bjets: &[Vec<R>], out: &mut [R], scratch: &mut Vec<Vec<R>>) {
        self.plan.accumulate(&self.coeff, bjets, &self.vars, out, scratch);
    }
}

/// A polynomial tensor compiled for fixed `(n, m)` and label range.
#[derive(Clone, Debug)]
pub struct CompiledTensor<R = f64> {
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub m: usize,
    pub labels: Labels,
    max_order: usize,
    terms: Vec<CompiledTerm<R>>,
}

impl<R: Ring> CompiledTensor<R> {
    pub fn new(p: &PolyTensor, n: usize, m: usize, labels: Labels) -> Self {
        CompiledTensor {
            k: p.k,
            s: p.s,
            n,
            m,
            labels,
            max_order: p.max_order(),
            terms: p.terms.iter().map(|t| compile_term(t, p.k, p.s, n, m, labels)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        let r = match self.labels {
            Labels::Normal => self.m,
            Labels::Ambient => self.n + self.m,
        };
        self.n.pow(self.s as u32) * r.pow((self.k - self.s) as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All components, tangent positions first (each over `0..n`), then
    /// labels (each over the label range), last index fastest.
    pub fn evaluate(&self, jets: &JetSample<R>) -> Result<Vec<R>> {
        if !self.terms.is_empty() && jets.a_max() < self.max_order {
            return Err(Error::InsufficientJetOrder {
                have: jets.a_max(),
                need: self.max_order,
            });
        }
        if (jets.n, jets.m) != (self.n, self.m) {
            return Err(Error::InvalidArgument(format!(
                "jets are for (n, m) = ({}, {}), tensor compiled for ({}, {})",
                jets.n, jets.m, self.n, self.m
            )));
        }
        let mut out = vec![R::zero(); self.len()];
        let mut scratch = Vec::new();
        for term in &self.terms {
            term.accumulate(&jets.bjets, &mut out, &mut scratch);
        }
        Ok(out)
    }
}

/// All components of `p` on `jets`, laid out as in [`CompiledTensor::evaluate`].
pub fn evaluate_tensor<R: Ring>(p: &PolyTensor, jets: &JetSample<R>, labels: Labels) -> Result<Vec<R>> {
    CompiledTensor::new(p, jets.n, jets.m, labels).evaluate(jets)
}

/// One component of `p`: tangent indices in `0..n`, labels as frame indices in `0..n+m`.
pub fn evaluate(p: &PolyTensor, jets: &JetSample, tangents: &[usize], labels: &[usize]) -> Result<f64> {
    if tangents.len() != p.s || labels.len() != p.labels() {
        return Err(Error::InvalidArgument(format!(
            "p^{{{},{}}} needs {} tangent and {} label indices",
            p.k,
            p.s,
            p.s,
            p.labels()
        )));
    }
    let (n, d) = (jets.n, jets.ambient_dim());
    if tangents.iter().any(|&t| t >= n) || labels.iter().any(|&l| l >= d) {
        return Err(Error::InvalidArgument("index out of range".into()));
    }
    let all = evaluate_tensor(p, jets, Labels::Ambient)?;
    let idx = labels.iter().fold(tangents.iter().fold(0, |acc, &t| acc * n + t), |acc, &l| acc * d + l);
    Ok(all[idx])
}

/// Compiled `|A^k|^2` for fixed `(n, m)`.
#[derive(Clone, Debug)]
pub struct CompiledNorm<R = f64> {
    pub k: usize,
    parts: Vec<(u64, CompiledTensor<R>)>,
}

impl<R: Ring> CompiledNorm<R> {
    pub fn new(expr: &SquaredNormExpr, n: usize, m: usize) -> Self {
        CompiledNorm {
            k: expr.k,
            parts: expr
                .parts
                .iter()
                .map(|(w, p)| (*w, CompiledTensor::new(p, n, m, Labels::Normal)))
                .collect(),
        }
    }

    pub fn evaluate(&self, jets: &JetSample<R>) -> Result<R> {
        let mut total = R::zero();
        for (w, part) in &self.parts {
            let comps = part.evaluate(jets)?;
            let mut sq = R::zero();
            for c in &comps {
                sq.add_assign(&c.mul(c));
            }
            total.add_assign(&sq.mul(&R::from_rational(Rational64::from_integer(*w as i64))));
        }
        Ok(total)
    }
}

/// `|A^k|^2` from the table, with labels over the normal frame.
pub fn norm_ak(jets: &JetSample, table: &RecursionTable, k: usize) -> Result<f64> {
    let expr = table.squared_norm_expr(k)?;
    CompiledNorm::new(&expr, jets.n, jets.m).evaluate(jets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{jets, Immersion};
    use approx::assert_relative_eq;

    fn circle(r: f64) -> JetSample {
        JetSample::from(&jets(&Immersion::circle(r), &[0.3], 3).unwrap())
    }

    #[test]
    fn p32_on_circle_is_curvature() {
        let table = RecursionTable::filled_to(3).unwrap();
        let v = evaluate(table.entry(3, 2).unwrap(), &circle(2.0), &[0, 0], &[1]).unwrap();
        assert_relative_eq!(v, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn p44_on_unit_circle() {
        let table = RecursionTable::filled_to(4).unwrap();
        let v = evaluate(table.entry(4, 4).unwrap(), &circle(1.0), &[0, 0, 0, 0], &[]).unwrap();
        assert_relative_eq!(v, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_tensor_evaluates_to_zero() {
        let p = PolyTensor::zero(5, 1);
        let out = evaluate_tensor(&p, &circle(1.0), Labels::Normal).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_circle_norms() {
        let table = RecursionTable::filled_to(4).unwrap();
        let j = circle(1.0);
        assert_relative_eq!(norm_ak(&j, &table, 2).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(norm_ak(&j, &table, 3).unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(norm_ak(&j, &table, 4).unwrap(), 33.0, epsilon = 1e-11);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let table = RecursionTable::filled_to(5).unwrap();
        let j = JetSample::from(&jets(&Immersion::circle(1.0), &[0.0], 1).unwrap());
        assert!(matches!(
            norm_ak(&j, &table, 5),
            Err(Error::InsufficientJetOrder { have: 1, need: 2 })
        ));
    }
}
