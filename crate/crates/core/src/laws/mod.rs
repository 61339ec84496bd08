//! Laws of service times and lead times: scalar building blocks, the joint
//! law of `(B, D)`, and the model data consumed by the fluid equations.

mod joint;
mod model;
mod scalar;

pub use joint::JointLaw;
pub use model::{FeasibilityReport, ModelData};
pub use scalar::{ScalarKind, ScalarLaw};
