//! Deterministic instance generators shared by the benchmark targets.
//!
//! Benchmarks need inputs that are cheap to rebuild, stable across runs, and
//! representative of real workloads: full-support bases with values spread
//! over a nontrivial range, so tilting, solving, and certification all do
//! real work.

use evt_core::{attainable_mean_range, EventSet, PowersetDistribution, ValueFunction};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible full-support instance over `n` events: values uniform in
/// [0, 5), weights bounded away from zero.
pub fn instance(seed: u64, n: usize) -> (PowersetDistribution, ValueFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << n;
    let events = EventSet::new((0..n).map(|i| format!("e{i}"))).expect("generated names are valid");
    let values: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..5.0)).collect();
    let mut weights: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let base = PowersetDistribution::new(events.clone(), weights)
        .expect("normalized weights form a distribution");
    let value = ValueFunction::new(events, values).expect("values are admissible");
    (base, value)
}

/// The midpoint of the attainable mean range: a strictly interior target
/// that every solver and sampler in the crate accepts.
pub fn midpoint_target(base: &PowersetDistribution, value: &ValueFunction) -> f64 {
    let range = attainable_mean_range(base, value).expect("instance is well formed");
    0.5 * (range.lo + range.hi)
}
