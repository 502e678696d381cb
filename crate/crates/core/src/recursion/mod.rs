//! Symbolic recursion for the polynomial tensors `p^{k,s}`.
//!
//! `A^k(X_1..X_s, N_1..N_{k-s}) = p^{k,s}_{j_1..j_{k-s}}(X_1..X_s) N_1^{j_1}..N_{k-s}^{j_{k-s}}`
//! for tangent `X` and normal `N`. Every `p^{k,s}` is a rational combination
//! of contracted products of `∇^a B`, stored as a [`PolyTensor`].

mod poly;
mod table;
mod term;

pub use poly::{EdgeJson, FactorJson, FreeJson, PolyJson, PolyTensor, TermJson};
pub use table::{binomial, chain_power_p_k2, RecursionTable, SquaredNormExpr};
pub use term::{BondKind, Factor, FactorKind, Link, SlotKind, Term, TermKey};
