use thiserror::Error;

use crate::powerset::SubsetMask;

/// Everything that can go wrong while building or transforming powerset
/// distributions. Validation failures carry the offending payload so callers
/// can point at the exact entry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An event set needs at least one event.
    #[error("event set is empty")]
    EmptyEventSet,

    /// Subset tables are dense over all 2^n subsets, so n is capped.
    #[error("event set has {count} events, the maximum is {max}")]
    TooManyEvents { count: usize, max: usize },

    /// Event labels identify bit positions and must be distinct.
    #[error("duplicate event label {label:?}")]
    DuplicateEvent { label: String },

    /// Empty labels cannot be referenced.
    #[error("event label at position {index} is empty")]
    EmptyEventLabel { index: usize },

    /// A dense table does not cover exactly one entry per subset.
    #[error("table has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },

    /// Probabilities live in [0, 1]; NaN and negatives are rejected.
    #[error("probability {value} for subset {mask:?} is negative or not finite")]
    NegativeProbability { mask: SubsetMask, value: f64 },

    /// The probability table must sum to 1 within the documented slack.
    #[error("probabilities sum to {sum}, which is outside 1 ± {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    /// Value tables must be finite and nonnegative.
    #[error("value {value} for subset {mask:?} is negative or not finite")]
    NegativeValue { mask: SubsetMask, value: f64 },

    /// Two tables were combined that are indexed by different event sets.
    #[error("operands are indexed by different event sets")]
    EventSetMismatch,

    /// Tilt rates β and γ are magnitudes; direction carries the sign.
    #[error("rate {rate} is negative")]
    NegativeRate { rate: f64 },

    /// The requested mean is not attainable by any distribution on the
    /// support of the base.
    #[error("target mean {target} lies outside the attainable range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    /// The value function is constant on the support, so only that constant
    /// mean is attainable.
    #[error(
        "value function is constant ({constant}) on the support but the target mean is {target}"
    )]
    DegenerateMismatch { constant: f64, target: f64 },

    /// The per-subset identities divide by α and are undefined at α = 0.
    #[error("identity is undefined at α = 0")]
    ZeroAlpha,

    /// Identities are anchored at the empty set, which must carry base mass.
    #[error("the empty set has zero base probability")]
    EmptySetExcluded,

    /// The queried subset has zero base probability.
    #[error("subset {mask:?} is outside the support of the base distribution")]
    OutOfSupport { mask: SubsetMask },

    /// The feasible-set sampler kept missing a straddling pair.
    #[error("no feasible sample after {budget} attempts; the target mean is too extreme")]
    ResampleBudgetExhausted { budget: usize },

    /// An empirical distribution needs at least one draw.
    #[error("sample batch is empty")]
    EmptyBatch,
}
