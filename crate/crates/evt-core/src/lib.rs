//! Probability distributions on the powerset of a finite event set, and the
//! exponential-tilt (Gibbs / anti-Gibbs) families that minimize relative
//! entropy under a mean-value constraint.
//!
//! The library is organized around one question: among all distributions `p`
//! on subsets of an event set that share a prescribed mean `⟨V⟩` of a
//! set function `V`, which one is closest to a base distribution `p*` in
//! relative entropy? The answer is an exponential tilt
//! `p(X) ∝ exp(α·V(X))·p*(X)`, with `α ≤ 0` (rate `β = −α`) damping
//! high-value subsets and `α ≥ 0` (rate `γ = α`) amplifying them.
//!
//! Modules:
//! - [`powerset`]: event sets, subset masks, value tables, validated
//!   distributions.
//! - [`gibbs`]: the tilt family, log-partition evaluation, and the monotone
//!   solver that inverts the mean map `α ↦ ⟨V⟩_α`.
//! - [`entropy`]: relative entropy, the per-subset value identities, a
//!   feasible-set sampler, and the certification driver that checks the
//!   minimization numerically.
//! - [`oracle`]: an independent Frank–Wolfe minimizer of relative entropy
//!   over the constraint polytope; shares no formulas with [`gibbs`].
//! - [`sampling`]: seeded Monte Carlo draws and empirical distributions.

pub mod entropy;
mod error;
pub mod gibbs;
mod numeric;
pub mod oracle;
pub mod powerset;
pub mod sampling;

pub use entropy::{
    mean_entropy_relation, pointwise_value_identity_residual, relative_entropy, verify_h_theorem,
    FeasibleSampler, MeanEntropyRelation, VerificationReport,
};
pub use error::Error;
pub use gibbs::{
    attainable_mean_range, gibbs_factor, solve_alpha_for_mean, Direction, GibbsModel, MeanRange,
};
pub use oracle::{minimize_kl, polytope_vertices, OracleConfig, OracleSolution};
pub use powerset::{EventSet, PowersetDistribution, SubsetMask, ValueFunction, MAX_EVENTS};
pub use sampling::{empirical_distribution, sample, SampleBatch};

/// Convenience alias: every fallible operation in this crate uses [`Error`].
pub type Result<T> = std::result::Result<T, Error>;
