//! Shared model setups for the benchmark targets.

use psq_core::{JointLaw, ModelData, ScalarLaw};

pub fn exp_exp_model(lambda: f64) -> ModelData {
    let b = ScalarLaw::exponential(1.0).unwrap();
    let d = ScalarLaw::exponential(1.0).unwrap();
    ModelData::new(lambda, JointLaw::independent(b, d).unwrap()).unwrap()
}

pub fn theta_model(lambda: f64) -> ModelData {
    let b = ScalarLaw::exponential(1.0).unwrap();
    let theta = ScalarLaw::two_point(1.0, 0.5, 4.0).unwrap();
    ModelData::new(lambda, JointLaw::proportional(b, theta).unwrap()).unwrap()
}
