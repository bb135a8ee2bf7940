//! An independent minimizer of `H(p‖p*)` over the constraint polytope
//! `{p : p ≥ 0, Σp = 1, ⟨V⟩_p = target, support(p) ⊆ support(p*)}`.
//!
//! This is the cross-check route: a Frank–Wolfe descent with pairwise
//! steps over the explicitly enumerated polytope vertices. It never
//! touches the exponential-tilt closed form, so agreement between the two
//! routes is evidence for both.
//!
//! The polytope's vertices are the feasible points with minimal support:
//! single atoms whose value already equals the target, and two-atom
//! mixtures of one value below and one above it. Each step scans those
//! vertices against the current entropy gradient and transfers weight from
//! the worst active vertex onto the best one by an exact line search.
//! Pairwise steps keep the descent linearly convergent even when the
//! optimum hugs the polytope boundary, where the classic step toward the
//! best vertex alone stalls by zigzagging.

use crate::error::Error;
use crate::numeric::compensated_sum;
use crate::powerset::{PowersetDistribution, SubsetMask, ValueFunction};
use crate::Result;

/// Knobs for [`minimize_kl`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Iteration cap; hitting it is reported, not fatal.
    pub max_iters: usize,
    /// Stop when the Frank–Wolfe duality gap drops to this level. The gap
    /// bounds the entropy suboptimality from above.
    pub tol: f64,
    /// Reserved for randomized starting points. The default start is the
    /// deterministic average of all polytope vertices, which is feasible
    /// and interior, so the seed is currently unused.
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_iters: 5000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// A vertex touches at most two atoms.
#[derive(Debug, Clone, Copy)]
struct Vertex {
    atoms: [(usize, f64); 2],
    len: usize,
}

impl Vertex {
    fn single(index: usize) -> Self {
        Vertex {
            atoms: [(index, 1.0), (0, 0.0)],
            len: 1,
        }
    }

    fn pair(lo: usize, w_lo: f64, hi: usize, w_hi: f64) -> Self {
        Vertex {
            atoms: [(lo, w_lo), (hi, w_hi)],
            len: 2,
        }
    }

    fn entries(&self) -> &[(usize, f64)] {
        &self.atoms[..self.len]
    }
}

/// Enumerates vertices sparsely; shared by the public enumeration and the
/// minimizer.
fn feasible_vertices(
    support: &[usize],
    values: &[f64],
    target: f64,
) -> std::result::Result<Vec<Vertex>, (f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in support {
        lo = lo.min(values[i]);
        hi = hi.max(values[i]);
    }
    if support.is_empty() || target < lo || target > hi {
        return Err((lo, hi));
    }
    let mut vertices = Vec::new();
    for &i in support {
        if values[i] == target {
            vertices.push(Vertex::single(i));
        }
    }
    for (pos, &i) in support.iter().enumerate() {
        if values[i] >= target {
            continue;
        }
        for &j in &support[pos + 1..] {
            if values[j] > target {
                let span = values[j] - values[i];
                vertices.push(Vertex::pair(
                    i,
                    (values[j] - target) / span,
                    j,
                    (target - values[i]) / span,
                ));
            }
        }
        // Pairs with the high atom listed first.
        for &j in &support[..pos] {
            if values[j] > target {
                let span = values[j] - values[i];
                vertices.push(Vertex::pair(
                    i,
                    (values[j] - target) / span,
                    j,
                    (target - values[i]) / span,
                ));
            }
        }
    }
    Ok(vertices)
}

/// All vertices of the constraint polytope, as dense distributions.
///
/// Vertices are the single atoms whose value equals the target, followed by
/// every two-atom mixture pairing a below-target atom with an above-target
/// atom at the weights that pin the mean. Each returned distribution is
/// feasible: normalized, supported inside `base_support`, mean on target
/// within rounding.
pub fn polytope_vertices(
    base_support: &[SubsetMask],
    value: &ValueFunction,
    target: f64,
) -> Result<Vec<PowersetDistribution>> {
    let support: Vec<usize> = base_support.iter().map(|m| m.index()).collect();
    let vertices = feasible_vertices(&support, value.values(), target)
        .map_err(|(lo, hi)| Error::TargetOutOfRange { target, lo, hi })?;
    let size = value.events().subset_count();
    vertices
        .into_iter()
        .map(|v| {
            let mut probs = vec![0.0; size];
            for &(i, w) in v.entries() {
                probs[i] = w;
            }
            PowersetDistribution::new(value.events().clone(), probs)
        })
        .collect()
}

/// What the minimizer found.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// The final iterate as a validated distribution.
    pub distribution: PowersetDistribution,
    /// `H(distribution‖base)` in nats.
    pub entropy: f64,
    /// Iterations performed, counting the final gap check.
    pub iterations: usize,
    /// Whether the duality gap reached `tol` within `max_iters`. A `false`
    /// here reports non-convergence without discarding the iterate.
    pub converged: bool,
    /// The last duality gap; an upper bound on entropy suboptimality.
    pub duality_gap: f64,
}

/// Minimizes `H(p‖base)` over the constraint polytope by Frank–Wolfe with
/// pairwise steps.
///
/// The iterate lives as a convex combination of polytope vertices, started
/// at their average. Each step transfers weight from the worst active
/// vertex onto the vertex that minimizes the linearized objective, with an
/// exact line search (bisection on the directional derivative, which is
/// monotone because the objective is convex). Stops when the duality gap
/// reaches `config.tol`.
///
/// The target must be strictly inside the attainable mean range; boundary
/// and degenerate instances are rejected with [`Error::TargetOutOfRange`].
pub fn minimize_kl(
    base: &PowersetDistribution,
    value: &ValueFunction,
    target: f64,
    config: &OracleConfig,
) -> Result<OracleSolution> {
    if base.events() != value.events() {
        return Err(Error::EventSetMismatch);
    }
    let probs = base.probs();
    let values = value.values();
    let support: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in &support {
        lo = lo.min(values[i]);
        hi = hi.max(values[i]);
    }
    if !(target > lo && target < hi) {
        return Err(Error::TargetOutOfRange { target, lo, hi });
    }

    let vertices =
        feasible_vertices(&support, values, target).expect("interior target has vertices");
    debug_assert!(!vertices.is_empty());

    // Start at the vertex average: every support atom appears in at least
    // one vertex, so the start is strictly positive on the support. The
    // dense table is updated incrementally and rebuilt from the weights on
    // drop steps and periodically, so weight bookkeeping, not float drift,
    // defines the iterate.
    let mut weights = vec![1.0 / vertices.len() as f64; vertices.len()];
    let mut x = dense_point(&vertices, &weights, probs.len());

    let mut gradient = vec![0.0; probs.len()];
    let mut iterations = 0;
    let mut converged = false;
    let mut duality_gap = f64::INFINITY;

    for iter in 1..=config.max_iters {
        iterations = iter;
        // ∂H/∂p_i = ln(p_i/p*_i) + 1. Entries at exactly zero would be
        // −∞; clamping to the smallest positive float dominates the vertex
        // scan the same way and keeps the gap arithmetic finite. The line
        // search keeps iterates interior, so the clamp is a safety net.
        for &i in &support {
            gradient[i] = (x[i].max(f64::MIN_POSITIVE) / probs[i]).ln() + 1.0;
        }

        // One scan serves both roles: the classic Frank–Wolfe vertex
        // (global minimizer of the linearized objective) and the away
        // vertex (the worst one still carrying weight).
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        let mut away = 0;
        let mut away_score = f64::NEG_INFINITY;
        for (k, v) in vertices.iter().enumerate() {
            let score: f64 = v.entries().iter().map(|&(i, w)| w * gradient[i]).sum();
            if score < best_score {
                best_score = score;
                best = k;
            }
            if weights[k] > 0.0 && score > away_score {
                away_score = score;
                away = k;
            }
        }
        let at_x = compensated_sum(support.iter().map(|&i| x[i] * gradient[i]));
        duality_gap = at_x - best_score;
        if duality_gap <= config.tol {
            converged = true;
            break;
        }
        if best == away {
            // All active vertices score identically, so the gap above is
            // float noise; no transfer can make progress.
            break;
        }

        let direction = pair_direction(&vertices[best], &vertices[away]);
        let t_max = weights[away];
        let t = pairwise_line_search(&x, &direction, probs, t_max);
        if t <= 0.0 {
            break;
        }
        weights[best] += t;
        if t >= t_max {
            weights[away] = 0.0;
        } else {
            weights[away] -= t;
        }
        for &(i, d) in &direction {
            x[i] = (x[i] + t * d).max(0.0);
        }
        if t >= t_max || iter % 64 == 0 {
            x = dense_point(&vertices, &weights, probs.len());
        }
    }

    let distribution = PowersetDistribution::new(base.events().clone(), x)?;
    let entropy = crate::entropy::relative_entropy(&distribution, base)?;
    Ok(OracleSolution {
        distribution,
        entropy,
        iterations,
        converged,
        duality_gap,
    })
}

/// Materializes the convex combination the weights describe.
fn dense_point(vertices: &[Vertex], weights: &[f64], len: usize) -> Vec<f64> {
    let mut x = vec![0.0; len];
    for (v, &w) in vertices.iter().zip(weights) {
        if w > 0.0 {
            for &(i, vw) in v.entries() {
                x[i] += w * vw;
            }
        }
    }
    x
}

/// Sparse difference `best − away` over the union of their atoms.
fn pair_direction(best: &Vertex, away: &Vertex) -> Vec<(usize, f64)> {
    let mut dir: Vec<(usize, f64)> = Vec::with_capacity(4);
    for &(i, w) in best.entries() {
        dir.push((i, w));
    }
    for &(i, w) in away.entries() {
        if let Some(entry) = dir.iter_mut().find(|(j, _)| *j == i) {
            entry.1 -= w;
        } else {
            dir.push((i, -w));
        }
    }
    dir.retain(|&(_, d)| d != 0.0);
    dir
}

/// Exact line search along the pairwise direction over `[0, t_max]`:
/// bisects `φ'(t) = Σ d_i·ln((x_i + t·d_i)/p*_i)`, which increases in `t`
/// by convexity. `φ'(0) = ⟨∇H, d⟩ < 0` whenever the duality gap is
/// positive, and a nonpositive `φ'(t_max)` means draining the away vertex
/// entirely is optimal.
fn pairwise_line_search(
    x: &[f64],
    direction: &[(usize, f64)],
    base_probs: &[f64],
    t_max: f64,
) -> f64 {
    let derivative = |t: f64| -> f64 {
        let mut total = 0.0;
        for &(i, d) in direction {
            let p_t = x[i] + t * d;
            if p_t <= 0.0 {
                // The objective's slope explodes at the boundary; the sign
                // of the offending coordinate decides which way.
                return if d < 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
            }
            total += d * (p_t / base_probs[i]).ln();
        }
        total
    };
    if derivative(t_max) <= 0.0 {
        return t_max;
    }
    let mut lo = 0.0;
    let mut hi = t_max;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if derivative(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::GibbsModel;
    use crate::powerset::EventSet;

    fn monoplet() -> (PowersetDistribution, ValueFunction) {
        let events = EventSet::new(["x"]).unwrap();
        let base = PowersetDistribution::new(events.clone(), vec![0.5, 0.5]).unwrap();
        let value = ValueFunction::new(events, vec![0.0, 1.0]).unwrap();
        (base, value)
    }

    fn doublet() -> (PowersetDistribution, ValueFunction) {
        let events = EventSet::new(["x", "y"]).unwrap();
        let base = PowersetDistribution::uniform(events.clone());
        let value = ValueFunction::new(events, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        (base, value)
    }

    #[test]
    fn monoplet_has_one_vertex_at_the_pinned_mixture() {
        let (base, value) = monoplet();
        let vertices = polytope_vertices(&base.support(), &value, 1.0 / 3.0).unwrap();
        assert_eq!(vertices.len(), 1);
        assert!((vertices[0].prob(SubsetMask(0)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((vertices[0].prob(SubsetMask(1)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn doublet_vertices_cover_atom_and_straddling_pairs() {
        let (base, value) = doublet();
        let vertices = polytope_vertices(&base.support(), &value, 1.0).unwrap();
        assert_eq!(vertices.len(), 3);
        // The atom with value exactly 1.
        assert_eq!(vertices[0].probs(), &[0.0, 1.0, 0.0, 0.0]);
        // Mixture of values 0 and 2 at equal weight.
        assert_eq!(vertices[1].probs(), &[0.5, 0.0, 0.5, 0.0]);
        // Mixture of values 0 and 3 at weights (2/3, 1/3).
        assert!((vertices[2].prob(SubsetMask(0)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((vertices[2].prob(SubsetMask(3)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn every_vertex_is_feasible() {
        let (base, value) = doublet();
        for &target in &[0.4, 1.0, 1.5, 2.6] {
            for vertex in polytope_vertices(&base.support(), &value, target).unwrap() {
                let sum: f64 = vertex.probs().iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12);
                let mean = vertex.mean_value(&value).unwrap();
                assert!((mean - target).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn vertices_reject_unreachable_targets() {
        let (base, value) = doublet();
        assert!(matches!(
            polytope_vertices(&base.support(), &value, 3.5),
            Err(Error::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn pinned_instance_converges_in_one_iteration() {
        let (base, value) = monoplet();
        let solution = minimize_kl(&base, &value, 1.0 / 3.0, &OracleConfig::default()).unwrap();
        assert!(solution.converged);
        assert_eq!(solution.iterations, 1);
        assert!((solution.distribution.prob(SubsetMask(0)) - 2.0 / 3.0).abs() < 1e-12);
        let expected = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
        assert!((solution.entropy - expected).abs() < 1e-10);
    }

    #[test]
    fn descent_matches_the_tilt_route_on_the_doublet() {
        let (base, value) = doublet();
        let model = GibbsModel::new(base.clone(), value.clone(), -1.0).unwrap();
        let target = model.mean();
        let tilted = model.distribution();
        let tilt_entropy = crate::entropy::relative_entropy(&tilted, &base).unwrap();

        let config = OracleConfig {
            tol: 1e-10,
            ..OracleConfig::default()
        };
        let solution = minimize_kl(&base, &value, target, &config).unwrap();
        assert!(solution.converged, "gap {}", solution.duality_gap);
        assert!(solution.entropy >= tilt_entropy - 1e-10);
        assert!(solution.entropy <= tilt_entropy + 1e-5);
        for (a, b) in solution.distribution.probs().iter().zip(tilted.probs()) {
            assert!((a - b).abs() <= 1e-4);
        }
    }

    #[test]
    fn iteration_cap_reports_without_discarding_the_iterate() {
        let (base, value) = doublet();
        let config = OracleConfig {
            max_iters: 1,
            tol: 1e-14,
            seed: 0,
        };
        let solution = minimize_kl(&base, &value, 1.5, &config).unwrap();
        assert!(!solution.converged);
        assert_eq!(solution.iterations, 1);
        assert!(solution.duality_gap > config.tol);
        assert!(solution.entropy.is_finite());
    }

    #[test]
    fn strict_interior_targets_are_required() {
        let (base, value) = doublet();
        assert!(matches!(
            minimize_kl(&base, &value, 3.0, &OracleConfig::default()),
            Err(Error::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            minimize_kl(&base, &value, 0.0, &OracleConfig::default()),
            Err(Error::TargetOutOfRange { .. })
        ));
    }
}
