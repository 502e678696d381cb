//! Differential geometry of analytic immersions and a finite-difference
//! oracle for the squared-distance function.

pub mod distance;
pub mod immersion;
pub mod jets;
pub mod taylor;
pub mod verify;

pub use distance::{symmetrize, DistanceField, FdTensor, Projection};
pub use immersion::{plane_rotation, Immersion, Shape};
pub use jets::{jets, JetData};
pub use verify::{ambient_b, default_step, sample_params, tangent_projection, verify_prop1, Prop1Report};
