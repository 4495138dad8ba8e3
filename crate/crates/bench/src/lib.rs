//! Shared fixtures for the benchmark targets: one cantilever model per
//! random-parameter choice and the matching inputs, sized like the
//! studies they mirror.

use recfosm::beam::{tip_deflection_model, BeamParameter, BeamParams};
use recfosm::distributions::{weibull_from_mean_cov, Distribution, Family};
use recfosm::propagation::{ObjectiveModel, RandomInput};

pub fn nominal() -> BeamParams {
    BeamParams::new(0.1, 1000.0, 70.0, 30.0, 30.0).unwrap()
}

/// Deflection as a function of the elastic modulus alone.
pub fn stiffness_model() -> ObjectiveModel {
    tip_deflection_model(&nominal(), &[BeamParameter::Modulus]).unwrap()
}

/// Deflection as a function of modulus and height jointly.
pub fn modulus_height_model() -> ObjectiveModel {
    tip_deflection_model(&nominal(), &[BeamParameter::Modulus, BeamParameter::Height]).unwrap()
}

/// The reference stiffness input, 70·F(25, 100).
pub fn stiffness_dist() -> Distribution {
    Distribution::scaled(Family::FisherF { d1: 25.0, d2: 100.0 }, 70.0).unwrap()
}

pub fn stiffness_input() -> RandomInput {
    RandomInput::independent(vec![stiffness_dist()]).unwrap()
}

/// Height spread at CoV 0.1, the middle of the sweep range.
pub fn height_dist() -> Distribution {
    weibull_from_mean_cov(30.0, 0.1).unwrap()
}

pub fn modulus_height_input() -> RandomInput {
    RandomInput::independent(vec![stiffness_dist(), height_dist()]).unwrap()
}
