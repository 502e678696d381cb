//! Higher derivatives of the squared distance function from a submanifold of
//! Euclidean space.
//!
//! The crate is organised in four layers:
//!
//! * [`recursion`] builds the polynomial tensors `p^{k,s}` that express the
//!   k-th derivative of `A = (|x|^2 - dist^2)/2` through the second
//!   fundamental form `B` and its covariant derivatives.
//! * [`geometry`] evaluates analytic immersions (curves, tori, ...) to obtain
//!   their geometric jets, projects points onto them and provides a
//!   finite-difference oracle for the derivatives of the squared distance.
//! * [`evaluator`] instantiates the symbolic tensors on numerical jets,
//!   assembles `|A^k|^2` and scans the lower bound `|A^k|^2 >= C |B|^{2k-4}`.
//! * [`flow`] runs the gradient flow of `∫ 1 + eps |A^k|^2` for closed plane
//!   curves.

pub mod error;
pub mod evaluator;
pub mod flow;
pub mod geometry;
pub mod recursion;

pub use error::{Error, Result};
