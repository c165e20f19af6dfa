//! Shared fixtures for the benchmarks.

use ppmlab::harness::ExperimentConfig;
use ppmlab::policy::StoppingPolicy;
use ppmlab::AttackModel;

/// `n = 25`, `p = 1/25`.
pub fn reference_model() -> AttackModel {
    AttackModel::with_reciprocal_probability(25).expect("valid model")
}

/// Basic, both epsilon-timed variants and the two fixed counts.
pub fn reference_policies(model: &AttackModel) -> Vec<StoppingPolicy> {
    vec![
        StoppingPolicy::Basic,
        StoppingPolicy::epsilon_timed(0.1).expect("valid epsilon"),
        StoppingPolicy::epsilon_timed(0.05).expect("valid epsilon"),
        StoppingPolicy::swka(model),
        StoppingPolicy::ss(model),
    ]
}

pub fn campaign(iterations: u64) -> ExperimentConfig {
    ExperimentConfig {
        iterations,
        ..ExperimentConfig::default()
    }
}
