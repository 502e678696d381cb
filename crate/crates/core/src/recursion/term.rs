//! Monomials of the tensor calculus: a product of `B`-jets (and Kronecker
//! deltas) glued together by contraction bonds.

use num_rational::Rational64;
use num_traits::{One, Zero};
use std::collections::BTreeSet;

/// Symbol carried by a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorKind {
    /// `∇^a B`: `a` derivative slots, two base slots and one ambient label.
    BJet(u8),
    /// Metric `δ` on two tangent slots.
    Kronecker,
}

/// Role of a single slot inside a factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Derivative,
    Base,
    Label,
}

impl SlotKind {
    pub fn is_tangent(self) -> bool {
        !matches!(self, SlotKind::Label)
    }
}

impl FactorKind {
    pub fn arity(self) -> usize {
        match self {
            FactorKind::BJet(a) => a as usize + 3,
            FactorKind::Kronecker => 2,
        }
    }

    pub fn slot_kind(self, slot: usize) -> SlotKind {
        match self {
            FactorKind::BJet(a) => {
                let a = a as usize;
                if slot < a {
                    SlotKind::Derivative
                } else if slot < a + 2 {
                    SlotKind::Base
                } else {
                    SlotKind::Label
                }
            }
            FactorKind::Kronecker => SlotKind::Base,
        }
    }

    /// Indices of the two mutually symmetric slots.
    pub fn symmetric_pair(self) -> (usize, usize) {
        match self {
            FactorKind::BJet(a) => (a as usize, a as usize + 1),
            FactorKind::Kronecker => (0, 1),
        }
    }

    pub fn order(self) -> Option<usize> {
        match self {
            FactorKind::BJet(a) => Some(a as usize),
            FactorKind::Kronecker => None,
        }
    }

    fn code(self) -> u32 {
        match self {
            FactorKind::Kronecker => 99,
            FactorKind::BJet(a) => 100 + a as u32,
        }
    }
}

/// Where a slot goes: a free tangent position `i_t`, a free label position
/// `j_l`, or a bond to another slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Tangent(u8),
    Label(u8),
    Bond { factor: u16, slot: u8 },
}

impl Link {
    pub fn bond(factor: usize, slot: usize) -> Link {
        Link::Bond {
            factor: factor as u16,
            slot: slot as u8,
        }
    }
}

/// Type of a contraction bond, by the kinds of its two endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondKind {
    TangentTangent,
    LabelLabel,
    LabelTangent,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub links: Vec<Link>,
}

impl Factor {
    pub fn new(kind: FactorKind, links: Vec<Link>) -> Self {
        debug_assert_eq!(kind.arity(), links.len());
        Factor { kind, links }
    }

    pub fn label(&self) -> Option<Link> {
        match self.kind {
            FactorKind::BJet(a) => Some(self.links[a as usize + 2]),
            FactorKind::Kronecker => None,
        }
    }
}

/// Coefficient times a contracted product of factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Rational64,
    pub factors: Vec<Factor>,
}

/// Normal-form key of a term, independent of its coefficient.
pub type TermKey = Vec<u32>;

impl Term {
    pub fn new(coeff: Rational64, factors: Vec<Factor>) -> Self {
        Term { coeff, factors }
    }

    pub fn max_order(&self) -> usize {
        self.factors
            .iter()
            .filter_map(|f| f.kind.order())
            .max()
            .unwrap_or(0)
    }

    pub fn has_factor(&self, kind: FactorKind) -> bool {
        self.factors.iter().any(|f| f.kind == kind)
    }

    pub fn slot_kind(&self, factor: usize, slot: usize) -> SlotKind {
        self.factors[factor].kind.slot_kind(slot)
    }

    /// All bonds, each reported once with its endpoints.
    pub fn bonds(&self) -> Vec<((usize, usize), (usize, usize), BondKind)> {
        let mut out = Vec::new();
        for (f, factor) in self.factors.iter().enumerate() {
            for (s, link) in factor.links.iter().enumerate() {
                if let Link::Bond { factor: g, slot: t } = *link {
                    let (g, t) = (g as usize, t as usize);
                    if (f, s) < (g, t) {
                        let a = self.slot_kind(f, s).is_tangent();
                        let b = self.slot_kind(g, t).is_tangent();
                        let kind = match (a, b) {
                            (true, true) => BondKind::TangentTangent,
                            (false, false) => BondKind::LabelLabel,
                            _ => BondKind::LabelTangent,
                        };
                        out.push(((f, s), (g, t), kind));
                    }
                }
            }
        }
        out
    }

    /// Free tangent and label positions referenced by the term.
    pub fn free_positions(&self) -> (BTreeSet<u8>, BTreeSet<u8>) {
        let mut tangents = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for factor in &self.factors {
            for link in &factor.links {
                match *link {
                    Link::Tangent(i) => {
                        tangents.insert(i);
                    }
                    Link::Label(j) => {
                        labels.insert(j);
                    }
                    Link::Bond { .. } => {}
                }
            }
        }
        (tangents, labels)
    }

    /// Rewrites every free link through `f`; bonds are untouched.
    pub fn map_free(&self, mut f: impl FnMut(Link) -> Link) -> Term {
        let mut out = self.clone();
        for factor in &mut out.factors {
            for link in &mut factor.links {
                if !matches!(link, Link::Bond { .. }) {
                    *link = f(*link);
                }
            }
        }
        out
    }

    /// Locates the endpoint currently mapped to the free link `target`.
    pub fn find_free(&self, target: Link) -> Option<(usize, usize)> {
        for (f, factor) in self.factors.iter().enumerate() {
            for (s, link) in factor.links.iter().enumerate() {
                if *link == target {
                    return Some((f, s));
                }
            }
        }
        None
    }

    pub fn connect(&mut self, a: (usize, usize), b: (usize, usize)) {
        self.factors[a.0].links[a.1] = Link::bond(b.0, b.1);
        self.factors[b.0].links[b.1] = Link::bond(a.0, a.1);
    }

    /// Appends a factor and returns its index. Links that are bonds must be
    /// completed by the caller with [`Term::connect`].
    pub fn push(&mut self, factor: Factor) -> usize {
        self.factors.push(factor);
        self.factors.len() - 1
    }

    fn remove_factor(&mut self, idx: usize) {
        self.factors.remove(idx);
        for factor in &mut self.factors {
            for link in &mut factor.links {
                if let Link::Bond { factor: g, .. } = link {
                    debug_assert_ne!(*g as usize, idx);
                    if *g as usize > idx {
                        *g -= 1;
                    }
                }
            }
        }
    }

    /// Eliminates Kronecker factors that merely rename or join tangent slots.
    fn contract_kroneckers(&mut self) {
        'outer: loop {
            for idx in 0..self.factors.len() {
                if self.factors[idx].kind != FactorKind::Kronecker {
                    continue;
                }
                let (l0, l1) = (self.factors[idx].links[0], self.factors[idx].links[1]);
                match (l0, l1) {
                    (Link::Bond { factor: g, slot: sg }, Link::Bond { factor: h, slot: sh }) => {
                        let (g, sg, h, sh) = (g as usize, sg as usize, h as usize, sh as usize);
                        if g == idx || h == idx {
                            continue;
                        }
                        // δ between two labels is the tangent projection, not a rename
                        if !self.slot_kind(g, sg).is_tangent() && !self.slot_kind(h, sh).is_tangent()
                        {
                            continue;
                        }
                        self.connect((g, sg), (h, sh));
                    }
                    (Link::Bond { factor: g, slot: sg }, free)
                    | (free, Link::Bond { factor: g, slot: sg }) => {
                        self.factors[g as usize].links[sg as usize] = free;
                    }
                    _ => continue,
                }
                self.remove_factor(idx);
                continue 'outer;
            }
            break;
        }
    }

    /// True when a bare `B` label meets a tangent slot or a free tangent
    /// position: `B` is normal-valued, so such contractions vanish.
    pub fn is_annihilated(&self) -> bool {
        self.factors.iter().any(|factor| {
            if factor.kind != FactorKind::BJet(0) {
                return false;
            }
            match factor.links[2] {
                Link::Tangent(_) => true,
                Link::Label(_) => false,
                Link::Bond { factor: g, slot: s } => self.slot_kind(g as usize, s as usize).is_tangent(),
            }
        })
    }

    /// Deterministic normal form, or `None` when the term vanishes.
    ///
    /// Symmetric slot pairs are ordered, factors are ordered by kind and
    /// bond signature, and bond endpoints are renumbered by position. The
    /// lexicographically smallest encoding over all admissible relabelings is
    /// selected. Derivative slots are never commuted.
    pub fn canonicalize(&self) -> Option<(Term, TermKey)> {
        if self.coeff.is_zero() {
            return None;
        }
        let mut term = self.clone();
        term.contract_kroneckers();
        if term.is_annihilated() {
            return None;
        }
        let (order, swaps, key) = term.best_encoding();
        Some((term.relabel(&order, &swaps), key))
    }

    fn link_descriptor(&self, link: Link) -> (u32, u32, u32) {
        match link {
            Link::Tangent(i) => (0, i as u32, 0),
            Link::Label(j) => (1, j as u32, 0),
            Link::Bond { factor, slot } => {
                let kind = self.factors[factor as usize].kind;
                let sk = match kind.slot_kind(slot as usize) {
                    SlotKind::Derivative => slot as u32,
                    SlotKind::Base => 50,
                    SlotKind::Label => 60,
                };
                (2, kind.code(), sk)
            }
        }
    }

    fn signature(&self, f: usize) -> (u32, Vec<(u32, u32, u32)>) {
        let factor = &self.factors[f];
        let mut desc: Vec<_> = factor.links.iter().map(|l| self.link_descriptor(*l)).collect();
        let (a, b) = factor.kind.symmetric_pair();
        if desc[a] > desc[b] {
            desc.swap(a, b);
        }
        (factor.kind.code(), desc)
    }

    /// Searches factor orders (within groups of equal signature) and swaps of
    /// symmetric pairs whose order is not already forced.
    fn best_encoding(&self) -> (Vec<usize>, Vec<bool>, TermKey) {
        let nf = self.factors.len();
        let sigs: Vec<_> = (0..nf).map(|f| self.signature(f)).collect();
        let mut idx: Vec<usize> = (0..nf).collect();
        idx.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &f in &idx {
            match groups.last_mut() {
                Some(g) if sigs[g[0]] == sigs[f] => g.push(f),
                _ => groups.push(vec![f]),
            }
        }

        // Swap choices: forced when at least one of the pair is free.
        let mut forced: Vec<Option<bool>> = vec![None; nf];
        for f in 0..nf {
            let factor = &self.factors[f];
            let (a, b) = factor.kind.symmetric_pair();
            let (la, lb) = (factor.links[a], factor.links[b]);
            let free_a = !matches!(la, Link::Bond { .. });
            let free_b = !matches!(lb, Link::Bond { .. });
            forced[f] = match (free_a, free_b) {
                (true, true) => Some(la > lb),
                (true, false) => Some(false),
                (false, true) => Some(true),
                (false, false) => None,
            };
        }
        let branch: Vec<usize> = (0..nf).filter(|&f| forced[f].is_none()).collect();

        let mut best: Option<(Vec<usize>, Vec<bool>, TermKey)> = None;
        let mut orders = Vec::new();
        permute_groups(&groups, 0, &mut Vec::new(), &mut orders);
        for order in &orders {
            for mask in 0..(1u64 << branch.len()) {
                let mut swaps: Vec<bool> = forced.iter().map(|x| x.unwrap_or(false)).collect();
                for (bit, &f) in branch.iter().enumerate() {
                    swaps[f] = mask >> bit & 1 == 1;
                }
                let key = self.encode(order, &swaps);
                if best.as_ref().map_or(true, |(_, _, k)| key < *k) {
                    best = Some((order.clone(), swaps, key));
                }
            }
        }
        best.expect("at least one ordering")
    }

    fn slot_perm(&self, f: usize, swap: bool, slot: usize) -> usize {
        let (a, b) = self.factors[f].kind.symmetric_pair();
        if !swap {
            slot
        } else if slot == a {
            b
        } else if slot == b {
            a
        } else {
            slot
        }
    }

    fn encode(&self, order: &[usize], swaps: &[bool]) -> TermKey {
        let nf = self.factors.len();
        let mut pos_of = vec![0usize; nf];
        let mut offset = vec![0usize; nf];
        let mut acc = 0;
        for (p, &f) in order.iter().enumerate() {
            pos_of[f] = p;
            offset[f] = acc;
            acc += self.factors[f].kind.arity();
        }
        let mut key = Vec::with_capacity(acc + nf);
        for &f in order {
            let factor = &self.factors[f];
            key.push(factor.kind.code());
            for new_slot in 0..factor.links.len() {
                let old_slot = self.slot_perm(f, swaps[f], new_slot);
                key.push(match factor.links[old_slot] {
                    Link::Tangent(i) => 1000 + i as u32,
                    Link::Label(j) => 2000 + j as u32,
                    Link::Bond { factor: g, slot: s } => {
                        let g = g as usize;
                        let s_new = self.slot_perm(g, swaps[g], s as usize);
                        3000 + (offset[g] + s_new) as u32
                    }
                });
            }
        }
        key
    }

    fn relabel(&self, order: &[usize], swaps: &[bool]) -> Term {
        let nf = self.factors.len();
        let mut pos_of = vec![0usize; nf];
        for (p, &f) in order.iter().enumerate() {
            pos_of[f] = p;
        }
        let factors = order
            .iter()
            .map(|&f| {
                let factor = &self.factors[f];
                let links = (0..factor.links.len())
                    .map(|new_slot| match factor.links[self.slot_perm(f, swaps[f], new_slot)] {
                        Link::Bond { factor: g, slot: s } => {
                            let g = g as usize;
                            Link::bond(pos_of[g], self.slot_perm(g, swaps[g], s as usize))
                        }
                        free => free,
                    })
                    .collect();
                Factor::new(factor.kind, links)
            })
            .collect();
        Term::new(self.coeff, factors)
    }

    pub fn is_unit(&self) -> bool {
        self.coeff.is_one()
    }
}

fn permute_groups(groups: &[Vec<usize>], g: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if g == groups.len() {
        out.push(prefix.clone());
        return;
    }
    let mut items = groups[g].clone();
    heap_permutations(&mut items, groups[g].len(), &mut |perm| {
        let len = prefix.len();
        prefix.extend_from_slice(perm);
        permute_groups(groups, g + 1, prefix, out);
        prefix.truncate(len);
    });
}

fn heap_permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k <= 1 {
        visit(items);
        return;
    }
    for i in 0..k - 1 {
        heap_permutations(items, k - 1, visit);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
    heap_permutations(items, k - 1, visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn bare_b(base0: Link, base1: Link, label: Link) -> Factor {
        Factor::new(FactorKind::BJet(0), vec![base0, base1, label])
    }

    #[test]
    fn label_bonded_to_tangent_is_zero() {
        // B^r_{i1 i2} B^{j1}_{r i0}
        let mut t = Term::new(
            r(1),
            vec![
                bare_b(Link::Tangent(1), Link::Tangent(2), Link::Label(0)),
                bare_b(Link::Label(0), Link::Tangent(0), Link::Label(0)),
            ],
        );
        t.connect((0, 2), (1, 0));
        t.factors[1].links[2] = Link::Label(0);
        assert!(t.canonicalize().is_none());
    }

    #[test]
    fn label_on_free_tangent_is_zero() {
        let t = Term::new(r(1), vec![bare_b(Link::Tangent(0), Link::Tangent(1), Link::Tangent(2))]);
        assert!(t.canonicalize().is_none());
    }

    #[test]
    fn factor_order_does_not_matter() {
        let mut a = Term::new(
            r(1),
            vec![
                bare_b(Link::Tangent(0), Link::Tangent(1), Link::Label(0)),
                bare_b(Link::Tangent(2), Link::Tangent(3), Link::Label(0)),
            ],
        );
        a.connect((0, 2), (1, 2));
        let mut b = Term::new(
            r(1),
            vec![
                bare_b(Link::Tangent(3), Link::Tangent(2), Link::Label(0)),
                bare_b(Link::Tangent(1), Link::Tangent(0), Link::Label(0)),
            ],
        );
        b.connect((0, 2), (1, 2));
        let (ca, ka) = a.canonicalize().unwrap();
        let (cb, kb) = b.canonicalize().unwrap();
        assert_eq!(ka, kb);
        assert_eq!(ca, cb);
    }

    #[test]
    fn base_slots_are_sorted() {
        let t = Term::new(r(1), vec![bare_b(Link::Tangent(1), Link::Tangent(0), Link::Label(0))]);
        let (c, _) = t.canonicalize().unwrap();
        assert_eq!(c.factors[0].links, vec![Link::Tangent(0), Link::Tangent(1), Link::Label(0)]);
    }

    #[test]
    fn kronecker_renames_a_tangent_slot() {
        // δ_{i1 r} B^{j1}_{r i0} = B^{j1}_{i1 i0}
        let mut t = Term::new(
            r(1),
            vec![
                Factor::new(FactorKind::Kronecker, vec![Link::Tangent(1), Link::Tangent(9)]),
                bare_b(Link::Tangent(9), Link::Tangent(0), Link::Label(0)),
            ],
        );
        t.connect((0, 1), (1, 0));
        let (c, _) = t.canonicalize().unwrap();
        assert_eq!(c.factors.len(), 1);
        assert_eq!(c.factors[0].links, vec![Link::Tangent(0), Link::Tangent(1), Link::Label(0)]);
    }

    #[test]
    fn derivative_slots_are_not_commuted() {
        let a = Term::new(
            r(1),
            vec![Factor::new(
                FactorKind::BJet(2),
                vec![Link::Tangent(0), Link::Tangent(1), Link::Tangent(2), Link::Tangent(3), Link::Label(0)],
            )],
        );
        let b = Term::new(
            r(1),
            vec![Factor::new(
                FactorKind::BJet(2),
                vec![Link::Tangent(1), Link::Tangent(0), Link::Tangent(2), Link::Tangent(3), Link::Label(0)],
            )],
        );
        assert_ne!(a.canonicalize().unwrap().1, b.canonicalize().unwrap().1);
    }
}
