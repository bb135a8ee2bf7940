//! Seeded Monte Carlo draws from a powerset distribution and the empirical
//! distributions they induce.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::powerset::{EventSet, PowersetDistribution, SubsetMask};
use crate::Result;

/// A batch of subset draws, tagged with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    events: EventSet,
    draws: Vec<SubsetMask>,
    seed: u64,
}

impl SampleBatch {
    pub fn events(&self) -> &EventSet {
        &self.events
    }

    pub fn draws(&self) -> &[SubsetMask] {
        &self.draws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Reassembles a batch, for callers that deserialized one.
    pub fn from_draws(events: EventSet, draws: Vec<SubsetMask>, seed: u64) -> Self {
        SampleBatch {
            events,
            draws,
            seed,
        }
    }
}

/// Draws `count` subsets by inverting the cumulative table in mask order.
///
/// Deterministic in `seed` (ChaCha stream cipher backed). Zero-probability
/// subsets are never drawn: their cumulative interval is empty.
pub fn sample(p: &PowersetDistribution, count: usize, seed: u64) -> SampleBatch {
    let mut cumulative = Vec::with_capacity(p.probs().len());
    let mut running = 0.0;
    let mut last_positive = 0;
    for (i, &prob) in p.probs().iter().enumerate() {
        running += prob;
        cumulative.push(running);
        if prob > 0.0 {
            last_positive = i;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let index = cumulative.partition_point(|&c| c <= u);
            // u at or beyond the final cumulative value (rounding can leave
            // it a hair under 1) falls into the last positive atom.
            SubsetMask(index.min(last_positive) as u16)
        })
        .collect();
    SampleBatch {
        events: p.events().clone(),
        draws,
        seed,
    }
}

/// Relative frequencies of the batch as a distribution: `count(X) / N`.
pub fn empirical_distribution(batch: &SampleBatch) -> Result<PowersetDistribution> {
    if batch.draws.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut counts = vec![0u64; batch.events.subset_count()];
    for draw in &batch.draws {
        counts[draw.index()] += 1;
    }
    let n = batch.draws.len() as f64;
    let probs = counts.into_iter().map(|c| c as f64 / n).collect();
    PowersetDistribution::new(batch.events.clone(), probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::relative_entropy;
    use crate::powerset::ValueFunction;

    fn monoplet_events() -> EventSet {
        EventSet::new(["x"]).unwrap()
    }

    #[test]
    fn point_mass_always_draws_the_same_subset() {
        let p = PowersetDistribution::new(monoplet_events(), vec![0.0, 1.0]).unwrap();
        let batch = sample(&p, 1000, 0);
        assert!(batch.draws().iter().all(|&m| m == SubsetMask(1)));
        let empirical = empirical_distribution(&batch).unwrap();
        assert_eq!(empirical.prob(SubsetMask(1)), 1.0);
    }

    #[test]
    fn same_seed_reproduces_the_batch() {
        let p = PowersetDistribution::new(monoplet_events(), vec![0.25, 0.75]).unwrap();
        let a = sample(&p, 500, 99);
        let b = sample(&p, 500, 99);
        assert_eq!(a, b);
        let c = sample(&p, 500, 100);
        assert_ne!(a.draws(), c.draws());
    }

    #[test]
    fn fair_coin_frequency_stays_in_band() {
        let p = PowersetDistribution::new(monoplet_events(), vec![0.5, 0.5]).unwrap();
        let batch = sample(&p, 100_000, 7);
        let hits = batch
            .draws()
            .iter()
            .filter(|&&m| m == SubsetMask(1))
            .count();
        let frequency = hits as f64 / batch.len() as f64;
        // ±0.006 is 3.9 standard deviations at this batch size.
        assert!(
            (0.494..=0.506).contains(&frequency),
            "frequency {frequency}"
        );
    }

    #[test]
    fn zero_probability_subsets_are_never_drawn() {
        let events = EventSet::new(["x", "y"]).unwrap();
        let p = PowersetDistribution::new(events.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let batch = sample(&p, 20_000, 13);
        assert!(batch
            .draws()
            .iter()
            .all(|&m| m == SubsetMask(0) || m == SubsetMask(3)));
    }

    #[test]
    fn empirical_distribution_tracks_the_truth() {
        let events = monoplet_events();
        let base = PowersetDistribution::new(events.clone(), vec![0.5, 0.5]).unwrap();
        let value = ValueFunction::new(events, vec![0.0, 1.0]).unwrap();
        let model = crate::gibbs::GibbsModel::with_rate(
            base,
            value,
            crate::gibbs::Direction::Perception,
            2.0f64.ln(),
        )
        .unwrap();
        let truth = model.distribution();
        let empirical = empirical_distribution(&sample(&truth, 100_000, 11)).unwrap();
        let divergence = relative_entropy(&empirical, &truth).unwrap();
        // Expected divergence is (2^n − 1)/(2N) ≈ 5e-6; 5e-4 is 100x slack.
        assert!(divergence <= 5e-4, "divergence {divergence}");
    }

    #[test]
    fn empty_batches_are_rejected() {
        let p = PowersetDistribution::uniform(monoplet_events());
        let batch = sample(&p, 0, 0);
        assert_eq!(
            empirical_distribution(&batch).unwrap_err(),
            Error::EmptyBatch
        );
    }
}
