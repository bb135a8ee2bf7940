//! Event sets, subset masks, and validated tables indexed by the powerset.
//!
//! An [`EventSet`] is an ordered list of up to 16 distinct labels. Subsets are
//! packed into a [`SubsetMask`]: bit `i` is set exactly when event `i` (in
//! listing order) belongs to the subset, so mask 0 is the empty set and masks
//! run densely from 0 to 2^n − 1. Value tables and probability tables are
//! dense vectors indexed by mask.

use crate::error::Error;
use crate::numeric::compensated_sum;
use crate::Result;

/// Hard cap on the number of events; tables are dense in 2^n.
pub const MAX_EVENTS: usize = 16;

/// Probability tables are accepted and rescaled when their sum is within
/// this distance of 1, and rejected beyond it.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// After rescaling, the stored table sums to 1 within this bound.
pub const NORMALIZATION_INTERNAL: f64 = 1e-12;

/// A subset of an event set, packed as a bitmask.
///
/// Bit `i` set means event `i` (in [`EventSet`] listing order) is present.
/// With at most 16 events every mask fits in a `u16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(pub u16);

impl SubsetMask {
    /// The empty set.
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// Position of this subset in a dense table.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Whether event `event_index` belongs to this subset.
    #[inline]
    pub fn contains(self, event_index: usize) -> bool {
        event_index < MAX_EVENTS && self.0 & (1 << event_index) != 0
    }
}

impl From<u16> for SubsetMask {
    fn from(bits: u16) -> Self {
        SubsetMask(bits)
    }
}

/// An ordered set of distinct, non-empty event labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSet {
    names: Vec<String>,
}

impl EventSet {
    /// Builds an event set from labels. Requires 1 to [`MAX_EVENTS`] labels,
    /// all non-empty and distinct.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyEventSet);
        }
        if names.len() > MAX_EVENTS {
            return Err(Error::TooManyEvents {
                count: names.len(),
                max: MAX_EVENTS,
            });
        }
        for (index, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::EmptyEventLabel { index });
            }
            if names[..index].contains(name) {
                return Err(Error::DuplicateEvent {
                    label: name.clone(),
                });
            }
        }
        Ok(EventSet { names })
    }

    /// Number of events `n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// An event set is never empty; this exists for clippy symmetry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of subsets, 2^n.
    #[inline]
    pub fn subset_count(&self) -> usize {
        1 << self.names.len()
    }

    /// Labels in listing order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// All subsets in increasing mask order, starting with the empty set.
    pub fn subsets(&self) -> impl Iterator<Item = SubsetMask> {
        (0..self.subset_count() as u32).map(|bits| SubsetMask(bits as u16))
    }
}

/// A nonnegative, finite value `V(X)` for every subset `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    events: EventSet,
    values: Vec<f64>,
}

impl ValueFunction {
    /// Validates a dense value table: one finite, nonnegative entry per
    /// subset in mask order.
    pub fn new(events: EventSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != events.subset_count() {
            return Err(Error::WrongLength {
                expected: events.subset_count(),
                got: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeValue {
                    mask: SubsetMask(index as u16),
                    value,
                });
            }
        }
        Ok(ValueFunction { events, values })
    }

    #[inline]
    pub fn value(&self, x: SubsetMask) -> f64 {
        self.values[x.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn events(&self) -> &EventSet {
        &self.events
    }
}

/// A validated probability distribution over the subsets of an event set.
///
/// Entries are nonnegative and sum to 1 within [`NORMALIZATION_INTERNAL`].
/// Zero entries are meaningful: they mark subsets outside the support, and
/// every operation in this crate preserves them exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PowersetDistribution {
    events: EventSet,
    probs: Vec<f64>,
}

impl PowersetDistribution {
    /// Validates a dense probability table in mask order.
    ///
    /// Entries must be finite and nonnegative. A sum within
    /// [`NORMALIZATION_SLACK`] of 1 is accepted and the table is rescaled by
    /// the computed sum; anything further off is rejected rather than
    /// silently renormalized.
    pub fn new(events: EventSet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != events.subset_count() {
            return Err(Error::WrongLength {
                expected: events.subset_count(),
                got: probs.len(),
            });
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeProbability {
                    mask: SubsetMask(index as u16),
                    value: p,
                });
            }
        }
        let sum = compensated_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_SLACK,
            });
        }
        let mut probs = probs;
        if sum != 1.0 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        debug_assert!(
            (compensated_sum(probs.iter().copied()) - 1.0).abs() <= NORMALIZATION_INTERNAL
        );
        Ok(PowersetDistribution { events, probs })
    }

    /// Validates a dense probability table and keeps every entry
    /// bit-for-bit.
    ///
    /// Same acceptance rule as [`PowersetDistribution::new`], but the table
    /// is never rescaled: callers that round-trip serialized tables need
    /// the parsed floats back exactly as written.
    pub fn from_table(events: EventSet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != events.subset_count() {
            return Err(Error::WrongLength {
                expected: events.subset_count(),
                got: probs.len(),
            });
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeProbability {
                    mask: SubsetMask(index as u16),
                    value: p,
                });
            }
        }
        let sum = compensated_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_SLACK,
            });
        }
        Ok(PowersetDistribution { events, probs })
    }

    /// The uniform distribution over all subsets.
    pub fn uniform(events: EventSet) -> Self {
        let count = events.subset_count();
        PowersetDistribution {
            events,
            probs: vec![1.0 / count as f64; count],
        }
    }

    /// Internal constructor for tables that are normalized by construction.
    /// Skips rescaling so exact values (for example a cloned base table)
    /// pass through untouched.
    pub(crate) fn from_normalized(events: EventSet, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), events.subset_count());
        debug_assert!(
            (compensated_sum(probs.iter().copied()) - 1.0).abs() <= NORMALIZATION_INTERNAL
        );
        PowersetDistribution { events, probs }
    }

    #[inline]
    pub fn prob(&self, x: SubsetMask) -> f64 {
        self.probs[x.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn events(&self) -> &EventSet {
        &self.events
    }

    /// Subsets with strictly positive probability, in mask order.
    pub fn support(&self) -> Vec<SubsetMask> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(index, _)| SubsetMask(index as u16))
            .collect()
    }

    /// The mean `⟨V⟩ = Σ_X p(X)·V(X)`, accumulated with compensation.
    ///
    /// Fails with [`Error::EventSetMismatch`] when the value table is indexed
    /// by a different event set.
    pub fn mean_value(&self, value: &ValueFunction) -> Result<f64> {
        if self.events != value.events {
            return Err(Error::EventSetMismatch);
        }
        Ok(compensated_sum(
            self.probs.iter().zip(&value.values).map(|(&p, &v)| p * v),
        ))
    }
}
