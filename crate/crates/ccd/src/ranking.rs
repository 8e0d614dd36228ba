//! Violation-based metric ranking: evaluate a small candidate population,
//! tally how often each metric leaves its bounds, and order metrics from least
//! to most violation-prone. The last-ranked metric is the first candidate for
//! relaxation.

use crate::problem::{CCDProblemInstance, CcdError, DesignPoint, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// How candidate designs are drawn from the design box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CandidateScheme {
    /// Evenly spaced points per dimension, inclusive of both bounds. A single
    /// point per dimension pins that dimension at its lower bound.
    Grid {
        theta_points: usize,
        phi_points: usize,
    },
    /// Independent uniform draws, reproducible from the seed.
    UniformRandom { samples: usize, seed: u64 },
}

impl CandidateScheme {
    /// The reference sweep: 5 theta points with phi pinned at its lower bound.
    pub fn reference_sweep() -> Self {
        Self::Grid {
            theta_points: 5,
            phi_points: 1,
        }
    }
}

impl Default for CandidateScheme {
    fn default() -> Self {
        Self::reference_sweep()
    }
}

/// Metrics ordered from least to most violation-prone, with the tallies that
/// produced the order. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub order: Vec<usize>,
    /// Violation tallies aligned with `order` (non-decreasing).
    pub counts: Vec<usize>,
    pub candidates_evaluated: usize,
}

fn linspace(lb: f64, ub: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lb];
    }
    (0..points)
        .map(|i| lb + (ub - lb) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Generate candidate designs according to the scheme.
pub fn generate_candidates(
    problem: &CCDProblemInstance,
    scheme: &CandidateScheme,
) -> Result<Vec<DesignPoint>> {
    match scheme {
        CandidateScheme::Grid {
            theta_points,
            phi_points,
        } => {
            if *theta_points == 0 || *phi_points == 0 {
                return Err(CcdError::Contract(
                    "grid schemes need at least one point per dimension".into(),
                ));
            }
            let theta_b = problem.theta_bounds();
            let phi_b = problem.phi_bounds();
            let theta_axes: Vec<Vec<f64>> = (0..theta_b.dim())
                .map(|d| linspace(theta_b.lower[d], theta_b.upper[d], *theta_points))
                .collect();
            let phi_axes: Vec<Vec<f64>> = (0..phi_b.dim())
                .map(|d| linspace(phi_b.lower[d], phi_b.upper[d], *phi_points))
                .collect();
            let axes: Vec<&Vec<f64>> = theta_axes.iter().chain(phi_axes.iter()).collect();
            let total: usize = axes.iter().map(|a| a.len()).product();
            let mut candidates = Vec::with_capacity(total);
            let mut index = vec![0usize; axes.len()];
            loop {
                let coords: Vec<f64> = axes.iter().zip(&index).map(|(a, i)| a[*i]).collect();
                let (theta, phi) = coords.split_at(theta_b.dim());
                candidates.push(DesignPoint::new(theta.to_vec(), phi.to_vec()));
                // odometer increment, last dimension fastest
                let mut d = axes.len();
                loop {
                    if d == 0 {
                        return Ok(candidates);
                    }
                    d -= 1;
                    index[d] += 1;
                    if index[d] < axes[d].len() {
                        break;
                    }
                    index[d] = 0;
                }
            }
        }
        CandidateScheme::UniformRandom { samples, seed } => {
            if *samples == 0 {
                return Err(CcdError::Contract(
                    "random schemes need at least one sample".into(),
                ));
            }
            let theta_b = problem.theta_bounds();
            let phi_b = problem.phi_bounds();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut candidates = Vec::with_capacity(*samples);
            for _ in 0..*samples {
                let theta: Vec<f64> = (0..theta_b.dim())
                    .map(|d| rng.gen_range(theta_b.lower[d]..=theta_b.upper[d]))
                    .collect();
                let phi: Vec<f64> = (0..phi_b.dim())
                    .map(|d| rng.gen_range(phi_b.lower[d]..=phi_b.upper[d]))
                    .collect();
                candidates.push(DesignPoint::new(theta, phi));
            }
            Ok(candidates)
        }
    }
}

/// Count, per metric, how many candidates leave the metric's bounds by more
/// than the tolerance. A value exactly at a bound is not a violation.
pub fn tally_violations(
    problem: &CCDProblemInstance,
    candidates: &[DesignPoint],
) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(CcdError::Contract(
            "violation tally needs a nonempty candidate list".into(),
        ));
    }
    let mut counts = vec![0usize; problem.num_metrics()];
    for design in candidates {
        let (_, report) = problem.evaluate_design(design)?;
        for (count, within) in counts.iter_mut().zip(&report.within_bounds) {
            if !within {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

/// Stable ascending sort by tally; ties broken by ascending metric index.
pub fn rank_metrics(counts: &[usize], candidates_evaluated: usize) -> RankedList {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&m| (counts[m], m));
    let sorted_counts = order.iter().map(|&m| counts[m]).collect();
    RankedList {
        order,
        counts: sorted_counts,
        candidates_evaluated,
    }
}

/// Convenience wrapper: generate, tally, rank.
pub fn rank_problem_metrics(
    problem: &CCDProblemInstance,
    scheme: &CandidateScheme,
) -> Result<RankedList> {
    let candidates = generate_candidates(problem, scheme)?;
    let counts = tally_violations(problem, &candidates)?;
    Ok(rank_metrics(&counts, candidates.len()))
}
