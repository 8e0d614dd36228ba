//! The all-at-once baseline: confirm the original problem is infeasible, relax
//! every metric bound, and sweep all weight combinations, counting how many
//! metrics each trial keeps within the original bounds.

use crate::problem::{CCDProblemInstance, DesignPoint, MetricReport, Result};
use crate::relaxation::{ReducedProblem, SelectionVector};
use crate::solver::{solve_reduced, SolveStatus, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

/// Number of metrics whose violation is within tolerance.
pub fn count_within_bounds(report: &MetricReport) -> usize {
    report.within_bounds.iter().filter(|w| **w).count()
}

/// Full Cartesian product of weight levels in odometer order: the last weight
/// varies fastest, trial 1 is all-first-level.
pub fn enumerate_weight_combos(levels: &[f64], m: usize) -> Vec<Vec<f64>> {
    let total = levels.len().pow(m as u32);
    let mut combos = Vec::with_capacity(total);
    for linear in 0..total {
        let mut weights = vec![0.0; m];
        let mut rem = linear;
        for d in (0..m).rev() {
            weights[d] = levels[rem % levels.len()];
            rem /= levels.len();
        }
        combos.push(weights);
    }
    combos
}

#[derive(Debug, Clone, Serialize)]
pub enum TrialOutcome {
    Solved {
        design: DesignPoint,
        metric_values: Vec<f64>,
        in_bounds_count: usize,
    },
    Failed {
        message: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineTrial {
    /// 1-based trial index in odometer order.
    pub index: usize,
    pub weights: Vec<f64>,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub weight_levels: Vec<f64>,
    pub trials: Vec<BaselineTrial>,
    pub max_in_bounds: usize,
    pub trials_achieving_max: usize,
    /// histogram[c] = number of trials with in-bounds count c, 0..=M.
    pub histogram: Vec<usize>,
    /// Set when the original all-hard problem was already feasible; the sweep
    /// is skipped in that case.
    pub original_solution: Option<DesignPoint>,
}

/// Run the baseline sweep. The original problem is solved with all bounds hard
/// first; only if that is infeasible does the sweep of all-relaxed trials run.
/// A failing trial is recorded without aborting the others.
pub fn run_baseline(
    problem: &CCDProblemInstance,
    levels: &[f64],
    solver: &SolverConfig,
) -> Result<BaselineReport> {
    let m = problem.num_metrics();

    let all_hard = ReducedProblem::new(problem, SelectionVector::all_hard(m), vec![1.0; m])?;
    let original = solve_reduced(&all_hard, solver)?;
    if original.status == SolveStatus::Feasible {
        return Ok(BaselineReport {
            weight_levels: levels.to_vec(),
            trials: Vec::new(),
            max_in_bounds: m,
            trials_achieving_max: 0,
            histogram: Vec::new(),
            original_solution: original.best_design,
        });
    }

    let combos = enumerate_weight_combos(levels, m);
    let trials: Vec<BaselineTrial> = combos
        .into_par_iter()
        .enumerate()
        .map(|(i, weights)| {
            let outcome = run_trial(problem, &weights, solver);
            BaselineTrial {
                index: i + 1,
                weights,
                outcome,
            }
        })
        .collect();

    let mut histogram = vec![0usize; m + 1];
    for trial in &trials {
        if let TrialOutcome::Solved { in_bounds_count, .. } = trial.outcome {
            histogram[in_bounds_count] += 1;
        }
    }
    let max_in_bounds = histogram
        .iter()
        .rposition(|&c| c > 0)
        .unwrap_or(0);
    let trials_achieving_max = histogram[max_in_bounds];

    Ok(BaselineReport {
        weight_levels: levels.to_vec(),
        trials,
        max_in_bounds,
        trials_achieving_max,
        histogram,
        original_solution: None,
    })
}

fn run_trial(problem: &CCDProblemInstance, weights: &[f64], solver: &SolverConfig) -> TrialOutcome {
    let m = problem.num_metrics();
    let reduced = match ReducedProblem::with_nonnegative_weights(
        problem,
        SelectionVector::all_relaxed(m),
        weights.to_vec(),
    ) {
        Ok(r) => r,
        Err(e) => return TrialOutcome::Failed { message: e.to_string() },
    };
    let outcome = match solve_reduced(&reduced, solver) {
        Ok(o) => o,
        Err(e) => return TrialOutcome::Failed { message: e.to_string() },
    };
    match (outcome.status, outcome.best_design) {
        (SolveStatus::Feasible, Some(design)) => match problem.evaluate_design(&design) {
            Ok((_, report)) => TrialOutcome::Solved {
                in_bounds_count: count_within_bounds(&report),
                metric_values: report.values,
                design,
            },
            Err(e) => TrialOutcome::Failed { message: e.to_string() },
        },
        _ => TrialOutcome::Failed {
            message: "all-relaxed trial found no design satisfying input bounds".into(),
        },
    }
}
