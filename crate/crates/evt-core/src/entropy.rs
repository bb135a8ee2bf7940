//! Relative entropy, the per-subset value identities, and numerical
//! certification that the tilt family minimizes relative entropy among all
//! distributions with the same mean.
//!
//! The certification driver pits the tilted distribution `p_α` against
//! random competitors `q` drawn from the same constraint set
//! `{q : support(q) ⊆ support(p*), ⟨V⟩_q = target}` and checks that the
//! entropy gap `H(q‖p*) − H(p_α‖p*)` never drops below the float-noise
//! floor. Each trial also recomputes the gap through the integrand
//! decomposition `Σ_X p_α(X)·(g ln g − g + 1)` with `g = q/p_α`, whose
//! pointwise nonnegativity is the reason the gap cannot be negative.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Error;
use crate::gibbs::{attainable_mean_range, solve_alpha_for_mean, GibbsModel};
use crate::numeric::compensated_sum;
use crate::powerset::{PowersetDistribution, SubsetMask, ValueFunction};
use crate::Result;

/// A certification run passes when the worst observed entropy gap stays
/// above this floor. The gap is a difference of two compensated entropy
/// sums, each accurate to a few ulps, so a true minimum can only dip this
/// far below zero through rounding.
pub const GAP_PASS_FLOOR: f64 = -1e-10;

/// Every distribution the feasible sampler emits has its mean within this
/// distance of the target.
pub const SAMPLE_MEAN_TOLERANCE: f64 = 1e-10;

/// How many straddling attempts the sampler makes before giving up.
pub const DEFAULT_MAX_RESAMPLES: usize = 10_000;

/// Relative entropy `H(p‖q) = Σ_X p(X)·ln(p(X)/q(X))` in nats.
///
/// Subsets with `p(X) = 0` contribute nothing regardless of `q(X)`. If `p`
/// puts mass outside the support of `q` the divergence is `+∞`. The result
/// is clamped at 0: rounding in near-equal inputs can otherwise surface as
/// a negative in the last ulp.
pub fn relative_entropy(p: &PowersetDistribution, q: &PowersetDistribution) -> Result<f64> {
    if p.events() != q.events() {
        return Err(Error::EventSetMismatch);
    }
    let mut terms = Vec::with_capacity(p.probs().len());
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(pi * (pi / qi).ln());
        }
    }
    Ok(compensated_sum(terms).max(0.0))
}

/// Residual of the per-subset identity that expresses `V(X)` through the
/// tilted and base probabilities:
///
/// `V(X) = (1/α)·ln(p(X)/p*(X)) + (1/α)·ln(p*(∅)/p(∅)) + V(∅)`
///
/// evaluated with `p = p_α`. Exact in real arithmetic for every subset in
/// the support; the returned residual is the left side minus the right
/// side. Undefined at `α = 0` and when the empty set carries no base mass.
pub fn pointwise_value_identity_residual(model: &GibbsModel, x: SubsetMask) -> Result<f64> {
    if model.alpha() == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    if model.base().prob(SubsetMask::EMPTY) <= 0.0 {
        return Err(Error::EmptySetExcluded);
    }
    if model.base().prob(x) <= 0.0 {
        return Err(Error::OutOfSupport { mask: x });
    }
    let alpha = model.alpha();
    let p = model.distribution();
    let ratio_x = (p.prob(x) / model.base().prob(x)).ln();
    let empty_term = (model.base().prob(SubsetMask::EMPTY) / p.prob(SubsetMask::EMPTY)).ln();
    let rhs = ratio_x / alpha + empty_term / alpha + model.value().value(SubsetMask::EMPTY);
    Ok(model.value().value(x) - rhs)
}

/// The averaged form of the per-subset identity.
///
/// Taking the `p_α`-expectation of [`pointwise_value_identity_residual`]'s
/// identity gives
///
/// `⟨V⟩ = (1/α)·H(p_α‖p*) + (1/α)·ln(p*(∅)/p(∅)) + V(∅)`
///
/// (the sign of the entropy term follows from the expectation of
/// `ln(p/p*)`, which is `+H`). `reconstructed_mean` is that right-hand
/// side; it matches `mean` to within accumulated rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEntropyRelation {
    /// `⟨V⟩` under the tilted distribution.
    pub mean: f64,
    /// `H(p_α‖p*)` in nats.
    pub relative_entropy: f64,
    /// `ln(p*(∅)/p_α(∅))`.
    pub empty_set_term: f64,
    /// The mean recovered from entropy, empty-set term, and `V(∅)`.
    pub reconstructed_mean: f64,
}

/// Evaluates the averaged identity for a tilted model. See
/// [`MeanEntropyRelation`] for the exact form.
pub fn mean_entropy_relation(model: &GibbsModel) -> Result<MeanEntropyRelation> {
    if model.alpha() == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    if model.base().prob(SubsetMask::EMPTY) <= 0.0 {
        return Err(Error::EmptySetExcluded);
    }
    let p = model.distribution();
    let mean = p.mean_value(model.value())?;
    let h = relative_entropy(&p, model.base())?;
    let empty_set_term = (model.base().prob(SubsetMask::EMPTY) / p.prob(SubsetMask::EMPTY)).ln();
    let reconstructed_mean =
        (h + empty_set_term) / model.alpha() + model.value().value(SubsetMask::EMPTY);
    Ok(MeanEntropyRelation {
        mean,
        relative_entropy: h,
        empty_set_term,
        reconstructed_mean,
    })
}

/// Draws random distributions from the constraint set
/// `{q : support(q) ⊆ support(p*), ⟨V⟩_q = target}`.
///
/// Every call to [`FeasibleSampler::draw`] with the same `(seed, trial)`
/// pair returns the same distribution: trial `t` reads ChaCha stream `t` of
/// a generator seeded with `seed`, so trials are independent and can be
/// evaluated in any order or in parallel.
#[derive(Debug, Clone)]
pub struct FeasibleSampler {
    base: PowersetDistribution,
    value: ValueFunction,
    target: f64,
    seed: u64,
    max_resamples: usize,
    /// Indices of the support atoms of the base.
    support: Vec<usize>,
    /// Dense tilted table hitting the target; `None` when the target sits on
    /// the boundary of the attainable range (no finite tilt reaches it).
    gibbs_point: Option<Vec<f64>>,
    /// Unit vector orthogonal to the all-ones vector, spanning the value
    /// direction on the support; used to project perturbations onto the
    /// constraint null space. `None` when the feasible set is a point.
    value_direction: Option<Vec<f64>>,
}

impl FeasibleSampler {
    /// Validates the instance and precomputes the tilted interior point.
    ///
    /// The target must lie in the closed attainable range; a boundary target
    /// is accepted here but every draw will exhaust its resample budget,
    /// because no full-support distribution attains a boundary mean.
    pub fn new(
        base: PowersetDistribution,
        value: ValueFunction,
        target: f64,
        seed: u64,
    ) -> Result<Self> {
        let range = attainable_mean_range(&base, &value)?;
        if range.degenerate {
            return Err(Error::DegenerateMismatch {
                constant: range.lo,
                target,
            });
        }
        if target < range.lo || target > range.hi {
            return Err(Error::TargetOutOfRange {
                target,
                lo: range.lo,
                hi: range.hi,
            });
        }
        let support: Vec<usize> = base
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect();
        let interior = target > range.lo && target < range.hi;
        let gibbs_point = if interior {
            let model = solve_alpha_for_mean(&base, &value, target, 1e-12)?;
            Some(model.distribution().probs().to_vec())
        } else {
            None
        };
        let value_direction = if interior && support.len() > 2 {
            let m = support.len() as f64;
            let v_mean = compensated_sum(support.iter().map(|&i| value.values()[i])) / m;
            let mut direction: Vec<f64> = support
                .iter()
                .map(|&i| value.values()[i] - v_mean)
                .collect();
            let norm = compensated_sum(direction.iter().map(|&d| d * d)).sqrt();
            for d in &mut direction {
                *d /= norm;
            }
            Some(direction)
        } else {
            None
        };
        Ok(FeasibleSampler {
            base,
            value,
            target,
            seed,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            support,
            gibbs_point,
            value_direction,
        })
    }

    /// Overrides the resample budget (default [`DEFAULT_MAX_RESAMPLES`]).
    pub fn with_max_resamples(mut self, max_resamples: usize) -> Self {
        self.max_resamples = max_resamples;
        self
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Draws the distribution for one trial. Deterministic in
    /// `(seed, trial)`.
    ///
    /// When the constraint set is a single point (two support atoms pin the
    /// mixture) that point is returned directly. Otherwise, with equal
    /// probability the draw either mixes two random support distributions
    /// whose means straddle the target, or perturbs the tilted interior
    /// point along a random direction in the null space of the constraints.
    pub fn draw(&self, trial: u64) -> Result<PowersetDistribution> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);

        if self.gibbs_point.is_some() && self.support.len() == 2 {
            return self.unique_point();
        }
        let perturb = self.gibbs_point.is_some() && rng.random_bool(0.5);
        if perturb {
            self.perturb_gibbs_point(&mut rng)
        } else {
            self.straddle_mix(&mut rng)
        }
    }

    /// Two support atoms and an interior target admit exactly one solution.
    fn unique_point(&self) -> Result<PowersetDistribution> {
        let (mut i, mut j) = (self.support[0], self.support[1]);
        let values = self.value.values();
        if values[i] > values[j] {
            std::mem::swap(&mut i, &mut j);
        }
        let span = values[j] - values[i];
        let mut probs = vec![0.0; self.base.probs().len()];
        probs[i] = (values[j] - self.target) / span;
        probs[j] = (self.target - values[i]) / span;
        self.finish(probs)
    }

    /// Mixes two random support distributions whose means straddle the
    /// target; the mixing weight is chosen so the mean lands exactly on it.
    ///
    /// The first attempt draws unbiased competitors. Each later attempt
    /// pushes the pair exponentially harder toward the two ends of the
    /// value range, so any strictly interior target gets straddled long
    /// before the budget runs out, no matter how close it sits to the
    /// boundary. Exact boundary targets can never be strictly straddled
    /// and still exhaust the budget.
    fn straddle_mix(&self, rng: &mut ChaCha8Rng) -> Result<PowersetDistribution> {
        let values = self.value.values();
        for attempt in 0..self.max_resamples {
            let kappa = if attempt == 0 {
                0.0
            } else {
                (2.0f64).powi(attempt.min(64) as i32 - 1)
            };
            let q1 = self.random_support_distribution(rng, -kappa);
            let q2 = self.random_support_distribution(rng, kappa);
            let m1 = compensated_sum(self.support.iter().map(|&i| q1[i] * values[i]));
            let m2 = compensated_sum(self.support.iter().map(|&i| q2[i] * values[i]));
            let (qlo, qhi, mlo, mhi) = if m1 <= m2 {
                (&q1, &q2, m1, m2)
            } else {
                (&q2, &q1, m2, m1)
            };
            if mlo < self.target && self.target < mhi {
                let t = (mhi - self.target) / (mhi - mlo);
                let mixed: Vec<f64> = qlo
                    .iter()
                    .zip(qhi)
                    .map(|(&a, &b)| t * a + (1.0 - t) * b)
                    .collect();
                return self.finish(mixed);
            }
        }
        Err(Error::ResampleBudgetExhausted {
            budget: self.max_resamples,
        })
    }

    /// Normalized exponentials of independent Gaussian scores plus a value
    /// bias on the support; zero elsewhere. Positive `bias` favors
    /// high-value atoms, negative favors low-value ones. Scores are
    /// max-shifted before exponentiation, so extreme biases underflow the
    /// disfavored atoms to zero instead of overflowing.
    fn random_support_distribution(&self, rng: &mut ChaCha8Rng, bias: f64) -> Vec<f64> {
        let values = self.value.values();
        let mut scores = vec![f64::NEG_INFINITY; self.base.probs().len()];
        let mut max_score = f64::NEG_INFINITY;
        for &i in &self.support {
            let z: f64 = rng.sample(StandardNormal);
            scores[i] = z + bias * values[i];
            max_score = max_score.max(scores[i]);
        }
        let mut table = vec![0.0; scores.len()];
        for &i in &self.support {
            table[i] = (scores[i] - max_score).exp();
        }
        let total = compensated_sum(self.support.iter().map(|&i| table[i]));
        for &i in &self.support {
            table[i] /= total;
        }
        table
    }

    /// Moves the tilted point along a random direction orthogonal to both
    /// constraints (total mass and mean), truncated to stay nonnegative.
    fn perturb_gibbs_point(&self, rng: &mut ChaCha8Rng) -> Result<PowersetDistribution> {
        let point = self.gibbs_point.as_ref().expect("interior point exists");
        let e2 = self
            .value_direction
            .as_ref()
            .expect("three or more support atoms");
        let m = self.support.len();
        for _ in 0..self.max_resamples {
            let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let z_mean = compensated_sum(z.iter().copied()) / m as f64;
            let along_e2 = compensated_sum(z.iter().zip(e2).map(|(&zi, &ei)| (zi - z_mean) * ei));
            let direction: Vec<f64> = z
                .iter()
                .zip(e2)
                .map(|(&zi, &ei)| zi - z_mean - along_e2 * ei)
                .collect();
            if direction.iter().all(|d| d.abs() <= 1e-12) {
                continue;
            }
            let mut max_step = f64::INFINITY;
            for (k, &i) in self.support.iter().enumerate() {
                if direction[k] < 0.0 {
                    max_step = max_step.min(point[i] / -direction[k]);
                }
            }
            debug_assert!(max_step.is_finite() && max_step > 0.0);
            let step = rng.random::<f64>() * max_step;
            let mut probs = vec![0.0; point.len()];
            for (k, &i) in self.support.iter().enumerate() {
                probs[i] = (point[i] + step * direction[k]).max(0.0);
            }
            return self.finish(probs);
        }
        Err(Error::ResampleBudgetExhausted {
            budget: self.max_resamples,
        })
    }

    /// Normalizes, nudges the mean back onto the target with one two-atom
    /// transfer when rounding drifted it, and validates.
    fn finish(&self, mut probs: Vec<f64>) -> Result<PowersetDistribution> {
        let total = compensated_sum(probs.iter().copied());
        for p in &mut probs {
            *p /= total;
        }
        let values = self.value.values();
        let mean = compensated_sum(self.support.iter().map(|&i| probs[i] * values[i]));
        let drift = mean - self.target;
        if drift.abs() > 1e-13 {
            // Transfer mass between the extreme-value atoms: this changes
            // the mean at the fastest rate per unit of moved probability,
            // so the correction stays far from the nonnegativity boundary.
            let lo = *self
                .support
                .iter()
                .min_by(|&&a, &&b| values[a].total_cmp(&values[b]))
                .expect("support is nonempty");
            let hi = *self
                .support
                .iter()
                .max_by(|&&a, &&b| values[a].total_cmp(&values[b]))
                .expect("support is nonempty");
            let delta = drift / (values[hi] - values[lo]);
            if probs[lo] + delta >= 0.0 && probs[hi] - delta >= 0.0 {
                probs[lo] += delta;
                probs[hi] -= delta;
            }
        }
        let result = PowersetDistribution::new(self.base.events().clone(), probs)?;
        debug_assert!({
            let m = compensated_sum(result.probs().iter().zip(values).map(|(&p, &v)| p * v));
            (m - self.target).abs() <= SAMPLE_MEAN_TOLERANCE
        });
        Ok(result)
    }
}

/// Outcome of one certification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    /// Number of competitor draws.
    pub trials: usize,
    /// `H(p_α‖p*)` for the tilted minimizer.
    pub gibbs_entropy: f64,
    /// Smallest `H(q‖p*)` seen across competitors.
    pub min_competitor_entropy: f64,
    /// Smallest gap `H(q‖p*) − H(p_α‖p*)` seen; nonnegative up to rounding
    /// when the minimization holds.
    pub worst_gap: f64,
    /// Largest disagreement between the gap and its integrand
    /// decomposition `Σ p_α·(g ln g − g + 1)` across trials.
    pub max_decomposition_residual: f64,
    /// `worst_gap >= GAP_PASS_FLOOR`.
    pub passed: bool,
}

/// Certifies numerically that the tilt hitting `target` minimizes relative
/// entropy to the base among distributions with that mean.
///
/// Solves for `p_α`, then draws `trials` feasible competitors and compares
/// entropies. Trials are deterministic in `(seed, trial index)` and
/// evaluated in parallel; the report is identical regardless of thread
/// count or execution order.
pub fn verify_h_theorem(
    base: &PowersetDistribution,
    value: &ValueFunction,
    target: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    assert!(trials >= 1, "at least one trial is required");
    let model = solve_alpha_for_mean(base, value, target, 1e-12)?;
    let p_alpha = model.distribution();
    let gibbs_entropy = relative_entropy(&p_alpha, base)?;
    let sampler = FeasibleSampler::new(base.clone(), value.clone(), target, seed)?;

    let pa = p_alpha.probs();
    let outcomes: Result<Vec<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let q = sampler.draw(trial)?;
            let h_q = relative_entropy(&q, base)?;
            let decomposition =
                compensated_sum(q.probs().iter().zip(pa).filter_map(|(&qi, &pi)| {
                    if pi > 0.0 {
                        let g = qi / pi;
                        let integrand = if g > 0.0 { g * g.ln() - g + 1.0 } else { 1.0 };
                        Some(pi * integrand)
                    } else {
                        None
                    }
                }));
            let gap = h_q - gibbs_entropy;
            Ok((h_q, (gap - decomposition).abs()))
        })
        .collect();
    let outcomes = outcomes?;

    let mut min_competitor_entropy = f64::INFINITY;
    let mut max_decomposition_residual: f64 = 0.0;
    for &(h_q, residual) in &outcomes {
        min_competitor_entropy = min_competitor_entropy.min(h_q);
        max_decomposition_residual = max_decomposition_residual.max(residual);
    }
    let worst_gap = min_competitor_entropy - gibbs_entropy;
    Ok(VerificationReport {
        trials,
        gibbs_entropy,
        min_competitor_entropy,
        worst_gap,
        max_decomposition_residual,
        passed: worst_gap >= GAP_PASS_FLOOR,
    })
}
