//! The exponential-tilt family `p_α(X) ∝ exp(α·V(X))·p*(X)` and the monotone
//! solver that picks `α` to hit a prescribed mean of `V`.
//!
//! The sign of `α` selects the regime: `α = −β ≤ 0` damps high-value subsets
//! (the Gibbs direction), `α = +γ ≥ 0` amplifies them (the anti-Gibbs
//! direction). Both regimes are handled by one signed parameter internally;
//! [`Direction`] converts from the nonnegative rates `β` and `γ` used at the
//! boundaries of the crate.
//!
//! All tilting happens in log space. Exponents are anchored at the largest
//! value on the support before scaling by `α`, so neither a large `|α|` nor a
//! large constant shift of `V` overflows, and a constant shift leaves the
//! distribution unchanged to the last bit that the inputs allow.

use crate::error::Error;
use crate::numeric::compensated_sum;
use crate::powerset::{PowersetDistribution, SubsetMask, ValueFunction};
use crate::Result;

/// Which way the tilt pushes probability mass relative to the base.
///
/// `Perception` is the Gibbs direction: rate `β ≥ 0`, signed tilt `α = −β`,
/// mass flows toward low-value subsets. `Activity` is the anti-Gibbs
/// direction: rate `γ ≥ 0`, signed tilt `α = +γ`, mass flows toward
/// high-value subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Perception,
    Activity,
}

impl Direction {
    /// Converts a nonnegative rate into the signed tilt `α`.
    pub fn signed_alpha(self, rate: f64) -> Result<f64> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::NegativeRate { rate });
        }
        Ok(match self {
            Direction::Perception => -rate,
            Direction::Activity => rate,
        })
    }

    /// Splits a signed tilt into its direction and nonnegative rate.
    /// Zero is reported as `Perception` with rate 0.
    pub fn from_alpha(alpha: f64) -> (Direction, f64) {
        if alpha > 0.0 {
            (Direction::Activity, alpha)
        } else {
            (Direction::Perception, -alpha)
        }
    }
}

/// The unnormalized tilt factor `exp(−β·V(X))` or `exp(+γ·V(X))`.
pub fn gibbs_factor(
    value: &ValueFunction,
    direction: Direction,
    rate: f64,
    x: SubsetMask,
) -> Result<f64> {
    let alpha = direction.signed_alpha(rate)?;
    Ok((alpha * value.value(x)).exp())
}

/// A base distribution, a value table, and a signed tilt `α`, with the
/// log-partition `ln Z = ln Σ_X exp(α·V(X))·p*(X)` cached at construction.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    base: PowersetDistribution,
    value: ValueFunction,
    alpha: f64,
    log_z: f64,
}

impl GibbsModel {
    /// Builds a model from a signed tilt. The base and value table must be
    /// indexed by the same event set, and `α` must be finite.
    pub fn new(base: PowersetDistribution, value: ValueFunction, alpha: f64) -> Result<Self> {
        if base.events() != value.events() {
            return Err(Error::EventSetMismatch);
        }
        if !alpha.is_finite() {
            return Err(Error::NegativeRate { rate: alpha });
        }
        let log_z = tilt(&base, &value, alpha).log_z;
        Ok(GibbsModel {
            base,
            value,
            alpha,
            log_z,
        })
    }

    /// Builds a model from a direction and nonnegative rate.
    pub fn with_rate(
        base: PowersetDistribution,
        value: ValueFunction,
        direction: Direction,
        rate: f64,
    ) -> Result<Self> {
        let alpha = direction.signed_alpha(rate)?;
        GibbsModel::new(base, value, alpha)
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Gibbs rate `β = max(−α, 0)`.
    #[inline]
    pub fn beta(&self) -> f64 {
        (-self.alpha).max(0.0)
    }

    /// Anti-Gibbs rate `γ = max(α, 0)`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.alpha.max(0.0)
    }

    /// Cached log-partition `ln Z`. Always finite.
    #[inline]
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn base(&self) -> &PowersetDistribution {
        &self.base
    }

    pub fn value(&self) -> &ValueFunction {
        &self.value
    }

    /// The normalized tilt `p_α(X) = exp(α·V(X))·p*(X) / Z`.
    ///
    /// Shares the support of the base exactly: zero entries stay zero, and
    /// at `α = 0` the base table is returned bit for bit.
    pub fn distribution(&self) -> PowersetDistribution {
        let t = tilt(&self.base, &self.value, self.alpha);
        PowersetDistribution::from_normalized(self.base.events().clone(), t.probs)
    }

    /// The tilt expressed relative to the empty set:
    /// `exp(α·(V(X) − V(∅)))·p*(X)/p*(∅)`, which equals `p_α(X)/p_α(∅)`.
    ///
    /// Requires the empty set to carry base mass.
    pub fn ratio_form(&self, x: SubsetMask) -> Result<f64> {
        let p_empty = self.base.prob(SubsetMask::EMPTY);
        if p_empty <= 0.0 {
            return Err(Error::EmptySetExcluded);
        }
        let dv = self.value.value(x) - self.value.value(SubsetMask::EMPTY);
        Ok((self.alpha * dv).exp() * self.base.prob(x) / p_empty)
    }

    /// Mean of `V` under the tilted distribution.
    pub fn mean(&self) -> f64 {
        tilt(&self.base, &self.value, self.alpha).mean(&self.value)
    }

    /// Derivative of the mean map `α ↦ ⟨V⟩_α`, which equals the variance of
    /// `V` under `p_α`. Computed from centered moments, so never negative.
    pub fn mean_alpha_derivative(&self) -> f64 {
        tilt(&self.base, &self.value, self.alpha).variance(&self.value)
    }
}

/// Result of one tilt evaluation: the normalized table and `ln Z`.
struct Tilt {
    probs: Vec<f64>,
    log_z: f64,
}

impl Tilt {
    fn mean(&self, value: &ValueFunction) -> f64 {
        compensated_sum(self.probs.iter().zip(value.values()).map(|(&p, &v)| p * v))
    }

    fn variance(&self, value: &ValueFunction) -> f64 {
        let mean = self.mean(value);
        compensated_sum(self.probs.iter().zip(value.values()).map(|(&p, &v)| {
            let d = v - mean;
            p * d * d
        }))
    }
}

/// Log-space tilt with double anchoring.
///
/// Values are anchored at the support maximum before scaling by `α`, so a
/// constant shift of the value table cancels in the exponent instead of
/// being amplified by `α`; the log-sum-exp shift then handles the spread.
/// `α = 0` short-circuits to the base table so no exp/log round trip can
/// perturb it.
fn tilt(base: &PowersetDistribution, value: &ValueFunction, alpha: f64) -> Tilt {
    let probs = base.probs();
    if alpha == 0.0 {
        return Tilt {
            probs: probs.to_vec(),
            log_z: 0.0,
        };
    }
    let values = value.values();

    let mut anchor = f64::NEG_INFINITY;
    for (&p, &v) in probs.iter().zip(values) {
        if p > 0.0 && v > anchor {
            anchor = v;
        }
    }

    // Scores s(X) = α·(V(X) − anchor) + ln p*(X) on the support.
    let mut scores = vec![f64::NEG_INFINITY; probs.len()];
    let mut max_score = f64::NEG_INFINITY;
    for i in 0..probs.len() {
        if probs[i] > 0.0 {
            let s = alpha * (values[i] - anchor) + probs[i].ln();
            scores[i] = s;
            if s > max_score {
                max_score = s;
            }
        }
    }

    let mut weights = vec![0.0; probs.len()];
    for i in 0..probs.len() {
        if probs[i] > 0.0 {
            weights[i] = (scores[i] - max_score).exp();
        }
    }
    let total = compensated_sum(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }

    Tilt {
        probs: weights,
        log_z: max_score + total.ln() + alpha * anchor,
    }
}

/// The closed interval of means attainable on the support of the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRange {
    /// Smallest value of `V` on the support.
    pub lo: f64,
    /// Largest value of `V` on the support.
    pub hi: f64,
    /// True when `V` is constant on the support, so only one mean exists.
    pub degenerate: bool,
}

/// Range of `⟨V⟩` over all distributions supported inside the support of
/// the base: the min and max of `V` on that support.
pub fn attainable_mean_range(
    base: &PowersetDistribution,
    value: &ValueFunction,
) -> Result<MeanRange> {
    if base.events() != value.events() {
        return Err(Error::EventSetMismatch);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&p, &v) in base.probs().iter().zip(value.values()) {
        if p > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(MeanRange {
        lo,
        hi,
        degenerate: lo == hi,
    })
}

/// Inverts the mean map: finds `α` with `⟨V⟩_α = target` within `tol`.
///
/// The mean map is nondecreasing in `α`, so the root is bracketed by
/// doubling outward from `α = 0` and then polished with damped Newton steps
/// (the derivative is the tilt variance) guarded by bisection. Strictly
/// interior targets always converge; a `tol` below the floating-point noise
/// of the mean evaluation returns the closest representable solution.
///
/// Degenerate instances (constant `V` on the support) only admit the
/// constant itself; the solver returns `α = 0` for that target and
/// [`Error::DegenerateMismatch`] for any other. Non-degenerate targets on or
/// outside the attainable boundary are rejected with
/// [`Error::TargetOutOfRange`].
pub fn solve_alpha_for_mean(
    base: &PowersetDistribution,
    value: &ValueFunction,
    target: f64,
    tol: f64,
) -> Result<GibbsModel> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(target.is_finite(), "target mean must be finite");
    let range = attainable_mean_range(base, value)?;
    if range.degenerate {
        if (target - range.lo).abs() <= tol {
            return GibbsModel::new(base.clone(), value.clone(), 0.0);
        }
        return Err(Error::DegenerateMismatch {
            constant: range.lo,
            target,
        });
    }
    if target <= range.lo || target >= range.hi {
        return Err(Error::TargetOutOfRange {
            target,
            lo: range.lo,
            hi: range.hi,
        });
    }

    let mean_at = |alpha: f64| tilt(base, value, alpha).mean(value);

    // Bracket [a, b] with mean(a) ≤ target ≤ mean(b) by doubling outward.
    let m0 = mean_at(0.0);
    let (mut a, mut b) = if m0 < target {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while mean_at(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e60 {
                // The target sits between the largest float-attainable mean
                // and the true supremum; no finite tilt reaches it.
                return Err(Error::TargetOutOfRange {
                    target,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
        }
        (lo, hi)
    } else if m0 > target {
        let mut hi = 0.0;
        let mut lo = -1.0;
        while mean_at(lo) > target {
            hi = lo;
            lo *= 2.0;
            if lo < -1e60 {
                return Err(Error::TargetOutOfRange {
                    target,
                    lo: range.lo,
                    hi: range.hi,
                });
            }
        }
        (lo, hi)
    } else {
        return GibbsModel::new(base.clone(), value.clone(), 0.0);
    };

    let mut current = 0.5 * (a + b);
    let mut best_alpha = current;
    let mut best_residual = f64::INFINITY;
    for _ in 0..200 {
        let t = tilt(base, value, current);
        let mean = t.mean(value);
        let residual = mean - target;
        if residual.abs() <= tol {
            return GibbsModel::new(base.clone(), value.clone(), current);
        }
        if residual.abs() < best_residual {
            best_residual = residual.abs();
            best_alpha = current;
        }
        if residual < 0.0 {
            a = current;
        } else {
            b = current;
        }
        if (b - a).abs() <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let variance = t.variance(value);
        let newton = current - residual / variance;
        current = if variance > 0.0 && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    // The bracket collapsed to adjacent floats: return the best iterate, its
    // residual sits at the evaluation noise floor.
    GibbsModel::new(base.clone(), value.clone(), best_alpha)
}
