use super::term::{BondKind, Factor, FactorKind, Link, SlotKind, Term, TermKey};
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

/// Polynomial tensor with `s` free tangent positions and `k - s` free label
/// positions, stored as a canonical, sorted list of terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyTensor {
    pub k: usize,
    pub s: usize,
    pub terms: Vec<Term>,
}

impl PolyTensor {
    pub fn zero(k: usize, s: usize) -> Self {
        PolyTensor { k, s, terms: Vec::new() }
    }

    /// Canonicalizes each term, merges equal normal forms and drops zeros.
    pub fn from_terms(k: usize, s: usize, terms: impl IntoIterator<Item = Term>) -> Self {
        let mut merged: HashMap<TermKey, Term> = HashMap::new();
        for term in terms {
            if let Some((canon, key)) = term.canonicalize() {
                merged
                    .entry(key)
                    .and_modify(|t| t.coeff += canon.coeff)
                    .or_insert(canon);
            }
        }
        let mut entries: Vec<(TermKey, Term)> =
            merged.into_iter().filter(|(_, t)| !t.coeff.is_zero()).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        PolyTensor {
            k,
            s,
            terms: entries.into_iter().map(|(_, t)| t).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> usize {
        self.k - self.s
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(Term::max_order).max().unwrap_or(0)
    }

    pub fn scaled(&self, c: Rational64) -> Self {
        PolyTensor::from_terms(
            self.k,
            self.s,
            self.terms.iter().map(|t| Term::new(t.coeff * c, t.factors.clone())),
        )
    }

    pub fn add(&self, other: &PolyTensor) -> Self {
        assert_eq!((self.k, self.s), (other.k, other.s));
        PolyTensor::from_terms(self.k, self.s, self.terms.iter().chain(&other.terms).cloned())
    }

    /// Terms containing at least one factor of the given kind.
    pub fn filter_kind(&self, kind: FactorKind) -> Self {
        PolyTensor {
            k: self.k,
            s: self.s,
            terms: self.terms.iter().filter(|t| t.has_factor(kind)).cloned().collect(),
        }
    }

    /// Covariant derivative with ambient labels frozen.
    ///
    /// The new derivative slot becomes free tangent position 0 and existing
    /// tangent positions shift by one. Each `∇^a B` factor contributes one
    /// Leibniz term; `δ` is parallel. A bond between a label and a tangent
    /// slot contracts the tangent part of an ambient vector, whose derivative
    /// picks up `⟨V, B(∂_0, e_r)⟩ e_r`; that correction enters as an extra
    /// bare-`B` factor spliced into the bond.
    pub fn formal_derivative(&self) -> PolyTensor {
        let mut out = Vec::new();
        for term in &self.terms {
            let shifted = term.map_free(|l| match l {
                Link::Tangent(i) => Link::Tangent(i + 1),
                other => other,
            });
            for (f, factor) in shifted.factors.iter().enumerate() {
                let FactorKind::BJet(a) = factor.kind else { continue };
                let mut t = shifted.clone();
                for other in &mut t.factors {
                    for link in &mut other.links {
                        if let Link::Bond { factor: g, slot } = link {
                            if *g as usize == f {
                                *slot += 1;
                            }
                        }
                    }
                }
                let factor = &mut t.factors[f];
                factor.kind = FactorKind::BJet(a + 1);
                factor.links.insert(0, Link::Tangent(0));
                out.push(t);
            }
            for ((f0, s0), (f1, s1), kind) in shifted.bonds() {
                if kind != BondKind::LabelTangent {
                    continue;
                }
                let (label_end, tangent_end) = if shifted.slot_kind(f0, s0) == SlotKind::Label {
                    ((f0, s0), (f1, s1))
                } else {
                    ((f1, s1), (f0, s0))
                };
                let mut t = shifted.clone();
                let z = t.push(Factor::new(
                    FactorKind::BJet(0),
                    vec![Link::Tangent(0), Link::Tangent(0), Link::Tangent(0)],
                ));
                t.connect((z, 1), tangent_end);
                t.connect((z, 2), label_end);
                out.push(t);
            }
        }
        PolyTensor::from_terms(self.k + 1, self.s + 1, out)
    }

    /// Applies a permutation to the free label positions.
    pub fn permute_labels(&self, perm: &[usize]) -> PolyTensor {
        assert_eq!(perm.len(), self.labels());
        PolyTensor::from_terms(
            self.k,
            self.s,
            self.terms.iter().map(|t| {
                t.map_free(|l| match l {
                    Link::Label(j) => Link::Label(perm[j as usize] as u8),
                    other => other,
                })
            }),
        )
    }

    /// Identifies every free label with label 0 (`p_{j...j}`).
    pub fn equal_labels(&self) -> PolyTensor {
        PolyTensor::from_terms(
            self.k,
            self.s,
            self.terms.iter().map(|t| {
                t.map_free(|l| match l {
                    Link::Label(_) => Link::Label(0),
                    other => other,
                })
            }),
        )
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            k: self.k,
            s: self.s,
            terms: self.terms.iter().map(term_json).collect(),
        }
    }
}

fn factor_name(kind: FactorKind) -> String {
    match kind {
        FactorKind::Kronecker => "delta".to_string(),
        FactorKind::BJet(0) => "B".to_string(),
        FactorKind::BJet(a) => format!("D{a}B"),
    }
}

fn slot_names(term: &Term) -> Vec<Vec<String>> {
    let mut dummy: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = 1;
    term.factors
        .iter()
        .enumerate()
        .map(|(f, factor)| {
            factor
                .links
                .iter()
                .enumerate()
                .map(|(s, link)| match *link {
                    Link::Tangent(i) => format!("i{}", i + 1),
                    Link::Label(j) => format!("j{}", j + 1),
                    Link::Bond { factor: g, slot: t } => {
                        let key = (f, s).min((g as usize, t as usize));
                        let id = *dummy.entry(key).or_insert_with(|| {
                            next += 1;
                            next - 1
                        });
                        format!("r{id}")
                    }
                })
                .collect()
        })
        .collect()
}

impl fmt::Display for PolyTensor {
    /// One term per line: `coeff * factor[tangent slots; label] * ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, term) in self.terms.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", term.coeff)?;
            let names = slot_names(term);
            for (factor, slots) in term.factors.iter().zip(names) {
                write!(f, " * {}[", factor_name(factor.kind))?;
                match factor.kind {
                    FactorKind::Kronecker => write!(f, "{}", slots.join(","))?,
                    FactorKind::BJet(a) => {
                        let tangent = &slots[..a as usize + 2];
                        write!(f, "{}; {}", tangent.join(","), slots[a as usize + 2])?;
                    }
                }
                write!(f, "]")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct PolyJson {
    pub k: usize,
    pub s: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Serialize)]
pub struct TermJson {
    pub coeff: String,
    pub factors: Vec<FactorJson>,
    pub edges: Vec<EdgeJson>,
    pub free: Vec<FreeJson>,
}

#[derive(Debug, Serialize)]
pub struct FactorJson {
    pub kind: String,
    pub order: Option<usize>,
    pub slots: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct EdgeJson {
    pub a: [usize; 2],
    pub b: [usize; 2],
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Debug, Serialize)]
pub struct FreeJson {
    pub position: String,
    pub at: [usize; 2],
}

fn term_json(term: &Term) -> TermJson {
    let names = slot_names(term);
    let factors = term
        .factors
        .iter()
        .zip(&names)
        .map(|(factor, slots)| FactorJson {
            kind: factor_name(factor.kind),
            order: factor.kind.order(),
            slots: slots.clone(),
        })
        .collect();
    let edges = term
        .bonds()
        .into_iter()
        .map(|(a, b, kind)| EdgeJson {
            a: [a.0, a.1],
            b: [b.0, b.1],
            kind: match kind {
                BondKind::TangentTangent => "tangent-tangent",
                BondKind::LabelLabel => "label-label",
                BondKind::LabelTangent => "label-tangent",
            }
            .to_string(),
        })
        .collect();
    let mut free = Vec::new();
    for (f, factor) in term.factors.iter().enumerate() {
        for (s, link) in factor.links.iter().enumerate() {
            let position = match *link {
                Link::Tangent(i) => format!("i{}", i + 1),
                Link::Label(j) => format!("j{}", j + 1),
                Link::Bond { .. } => continue,
            };
            free.push(FreeJson { position, at: [f, s] });
        }
    }
    free.sort_by(|a, b| a.position.cmp(&b.position));
    TermJson {
        coeff: term.coeff.to_string(),
        factors,
        edges,
        free,
    }
}
