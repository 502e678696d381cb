//! Gradient flow of `∫ 1 + ε|A^k|² ds` for closed plane curves.
//!
//! The flow is the exact gradient of a discrete energy on node polygons, so
//! descent runs decrease the discrete energy at every accepted step.

mod discrete;
mod mcf;
pub mod io;
mod run;
mod state;

pub use discrete::{d1, d2, CurveEnergy, EnergyReport};
pub use mcf::{mcf_compare, McfConfig, McfReport, McfRow};
pub use run::{run, EnergyEntry, FlowConfig, StopReason, Stepper, Trajectory};
pub use state::{hausdorff, CurveState};
