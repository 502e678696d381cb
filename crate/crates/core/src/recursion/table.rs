use super::poly::PolyTensor;
use super::term::{Factor, FactorKind, Link, Term};
use crate::error::{Error, Result};
use num_rational::Rational64;
use std::collections::BTreeMap;

/// Table `(k, s) -> p^{k,s}` grown one order at a time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionTable {
    entries: BTreeMap<(usize, usize), PolyTensor>,
}

fn one() -> Rational64 {
    Rational64::from_integer(1)
}

fn bare_b(base0: Link, base1: Link, label: Link) -> Factor {
    Factor::new(FactorKind::BJet(0), vec![base0, base1, label])
}

impl RecursionTable {
    /// Order-two entries: only the tangent block `p^{2,2} = δ` is nonzero.
    pub fn base() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert((2, 0), PolyTensor::zero(2, 0));
        entries.insert((2, 1), PolyTensor::zero(2, 1));
        let delta = Term::new(
            one(),
            vec![Factor::new(FactorKind::Kronecker, vec![Link::Tangent(0), Link::Tangent(1)])],
        );
        entries.insert((2, 2), PolyTensor::from_terms(2, 2, [delta]));
        RecursionTable { entries }
    }

    /// Table filled for every order up to and including `k_max`.
    pub fn filled_to(k_max: usize) -> Result<Self> {
        let mut table = Self::base();
        for k in 3..=k_max {
            table = table.extend(k)?;
        }
        Ok(table)
    }

    pub fn max_k(&self) -> usize {
        self.entries.keys().map(|&(k, _)| k).max().unwrap_or(0)
    }

    pub fn get(&self, k: usize, s: usize) -> Option<&PolyTensor> {
        self.entries.get(&(k, s))
    }

    pub fn entry(&self, k: usize, s: usize) -> Result<&PolyTensor> {
        self.get(k, s).ok_or(Error::MissingEntries(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &PolyTensor)> {
        self.entries.iter()
    }

    fn require(&self, k: usize) -> Result<()> {
        if (0..=k).all(|s| self.entries.contains_key(&(k, s))) {
            Ok(())
        } else {
            Err(Error::MissingEntries(k))
        }
    }

    /// Returns a new table with all entries of order `k_new`.
    ///
    /// With `k = k_new - 1`, each entry `p^{k+1,s}` for `2 <= s <= k+1` is the
    /// sum of four groups: the derivative of `p^{k,s-1}`, the label-rerouted
    /// copies of `p^{k,s-1}` against `B`, the copies of `p^{k,s-2}` whose first
    /// label meets the label of `B`, and the copies of `p^{k,s}` whose last
    /// tangent slot meets `B`. Groups indexed by labels are empty at `s = k+1`.
    pub fn extend(&self, k_new: usize) -> Result<Self> {
        if k_new < 3 {
            return Err(Error::InvalidArgument(format!("cannot extend to k = {k_new}")));
        }
        let k = k_new - 1;
        self.require(k)?;
        let mut entries = self.entries.clone();
        entries.insert((k_new, 0), PolyTensor::zero(k_new, 0));
        entries.insert((k_new, 1), PolyTensor::zero(k_new, 1));
        for s in 2..=k_new {
            let mut terms: Vec<Term> = Vec::new();
            let labels = k_new - s;

            // ∇ p^{k,s-1}
            terms.extend(self.entries[&(k, s - 1)].formal_derivative().terms);

            // -Σ_h p^{k,s-1}_{..r..} B^{j_h}_{r i0}
            for h in 0..labels {
                for q in &self.entries[&(k, s - 1)].terms {
                    let mut t = q.map_free(|l| match l {
                        Link::Tangent(i) => Link::Tangent(i + 1),
                        other => other,
                    });
                    let end = t
                        .find_free(Link::Label(h as u8))
                        .expect("label position present");
                    let b = t.push(bare_b(Link::Tangent(0), Link::Tangent(0), Link::Label(h as u8)));
                    t.connect((b, 0), end);
                    t.coeff = -t.coeff;
                    terms.push(t);
                }
            }

            // -Σ_h p^{k,s-2}_{r j..., i without h} B^r_{i0 ih}
            for h in 1..s {
                for q in &self.entries[&(k, s - 2)].terms {
                    let mut t = q.map_free(|l| match l {
                        Link::Tangent(i) => {
                            let i = i as usize + 1;
                            Link::Tangent(if i < h { i } else { i + 1 } as u8)
                        }
                        Link::Label(0) => Link::Label(u8::MAX),
                        Link::Label(j) => Link::Label(j - 1),
                        other => other,
                    });
                    let end = t
                        .find_free(Link::Label(u8::MAX))
                        .expect("first label present");
                    let b = t.push(bare_b(Link::Tangent(0), Link::Tangent(h as u8), Link::Tangent(0)));
                    t.connect((b, 2), end);
                    t.coeff = -t.coeff;
                    terms.push(t);
                }
            }

            // +Σ_h p^{k,s}_{j without h, i1.. r} B^{j_h}_{r i0}
            if s <= k {
                for h in 0..labels {
                    for q in &self.entries[&(k, s)].terms {
                        let last = (s - 1) as u8;
                        let mut t = q.map_free(|l| match l {
                            Link::Tangent(i) if i == last => Link::Tangent(u8::MAX),
                            Link::Tangent(i) => Link::Tangent(i + 1),
                            Link::Label(j) => Link::Label(if (j as usize) < h { j } else { j + 1 }),
                            other => other,
                        });
                        let end = t
                            .find_free(Link::Tangent(u8::MAX))
                            .expect("last tangent position present");
                        let b = t.push(bare_b(Link::Tangent(0), Link::Tangent(0), Link::Label(h as u8)));
                        t.connect((b, 0), end);
                        terms.push(t);
                    }
                }
            }

            entries.insert((k_new, s), PolyTensor::from_terms(k_new, s, terms));
        }
        Ok(RecursionTable { entries })
    }

    /// Part of `p^{k,k-1}` that carries the top derivative `∇^{k-3} B`.
    pub fn leading_term(&self, k: usize) -> Result<PolyTensor> {
        if k < 3 {
            return Err(Error::InvalidArgument(format!("leading term needs k >= 3, got {k}")));
        }
        let p = self.entry(k, k - 1)?;
        Ok(p.filter_kind(FactorKind::BJet((k - 3) as u8)))
    }

    /// Squared norm of the k-th derivative tensor as a formal sum
    /// `Σ_s binom(k, s) ⟨p^{k,s}, p^{k,s}⟩` (free labels over the normal frame).
    pub fn squared_norm_expr(&self, k: usize) -> Result<SquaredNormExpr> {
        self.require(k)?;
        let parts = (0..=k)
            .map(|s| (binomial(k, s), self.entries[&(k, s)].clone()))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Ok(SquaredNormExpr { k, parts })
    }
}

/// Closed form of `p^{k,2}_{j...j}`: `(k-2)!` times the chain
/// `B^j_{i0 r1} B^j_{r1 r2} ... B^j_{r_{k-3} i1}`.
pub fn chain_power_p_k2(k: usize) -> Result<PolyTensor> {
    match k {
        0..=1 => Err(Error::InvalidArgument(format!("chain formula needs k >= 2, got {k}"))),
        2 => Ok(RecursionTable::base().entries[&(2, 2)].clone()),
        _ => {
            let len = k - 2;
            let coeff = Rational64::from_integer((1..=len as i64).product());
            let mut term = Term::new(coeff, Vec::new());
            for _ in 0..len {
                term.push(bare_b(Link::Tangent(0), Link::Tangent(1), Link::Label(0)));
            }
            for f in 0..len - 1 {
                term.connect((f, 1), (f + 1, 0));
            }
            term.factors[0].links[0] = Link::Tangent(0);
            term.factors[len - 1].links[1] = Link::Tangent(1);
            Ok(PolyTensor::from_terms(k, 2, [term]))
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Formal scalar `|A^k|^2`: a weighted list of polynomial tensors whose
/// squared components (tangent slots over the tangent frame, labels over the
/// normal frame) are summed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquaredNormExpr {
    pub k: usize,
    pub parts: Vec<(u64, PolyTensor)>,
}
