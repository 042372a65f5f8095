//! Shared fixtures for the criterion benches.

use crtfrag_core::mechanism::{BranchingMechanism, LevyMeasure};
use crtfrag_core::rng::stream;
use crtfrag_core::sampler::{harvest_excursions, ExcursionRecord, HarvestTarget, SamplerConfig};

pub fn brownian() -> BranchingMechanism {
    BranchingMechanism::brownian(0.5).unwrap()
}

pub fn brownian_atoms() -> BranchingMechanism {
    BranchingMechanism::new(0.0, 0.5, LevyMeasure::FiniteAtoms { atoms: vec![(1.0, 1.0)] })
        .unwrap()
}

/// A reproducible bag of materialized excursions totalling a few units of
/// local time.
pub fn fixture_excursions(m: &BranchingMechanism, dt: f64) -> Vec<ExcursionRecord> {
    let cfg = SamplerConfig::for_mechanism(m, dt);
    harvest_excursions(
        m,
        &cfg,
        HarvestTarget::LocalTimeCapped { l: 4.0, max_time: 2e3 },
        true,
        u64::MAX,
        &mut stream(99, "bench-fixture", 0),
    )
    .expect("capped harvest")
    .excursions
}
