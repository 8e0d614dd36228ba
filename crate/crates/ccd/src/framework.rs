//! The outer relaxation loop: rank metrics once, start from an initial
//! selection vector, and after each infeasible solve move up the ranked list,
//! relaxing everything below, until a solution exists or every metric bound is
//! relaxed.

use crate::problem::{CcdError, DesignPoint, MetricReport, Result, Trajectory};
use crate::ranking::{rank_problem_metrics, CandidateScheme, RankedList};
use crate::relaxation::{ReducedProblem, SelectionVector};
use crate::solver::{solve_reduced, SolveStatus, SolverConfig};
use crate::CCDProblemInstance;
use serde::Serialize;

/// How the selection vector starts out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum InitializationPolicy {
    /// All bounds hard: first look at the original problem.
    AllHard,
    /// Pre-relax the k most violation-prone (last-ranked) metrics.
    PreRelaxBottomK(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameworkConfig {
    pub initialization_policy: InitializationPolicy,
    /// Ranked-list rows to move up per infeasible solve (at least 1).
    pub rows_per_advance: usize,
    /// Slack weights, one per metric; `None` means all ones.
    pub weights: Option<Vec<f64>>,
    pub solver: SolverConfig,
    pub ranking_scheme: CandidateScheme,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            initialization_policy: InitializationPolicy::AllHard,
            rows_per_advance: 1,
            weights: None,
            solver: SolverConfig::default(),
            ranking_scheme: CandidateScheme::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameworkStatus {
    Solved,
    /// Infeasible even with every metric bound relaxed: the design box and
    /// input bounds alone are contradictory.
    IrreduciblyInfeasible,
}

/// One attempted solve in the outer loop.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub selection: SelectionVector,
    pub status: SolveStatus,
    pub objective: Option<f64>,
}

/// Everything known at the solution design.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub design: DesignPoint,
    pub trajectory: Trajectory,
    pub metric_report: MetricReport,
    pub slacks: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameworkResult {
    pub status: FrameworkStatus,
    pub final_selection: SelectionVector,
    /// 0-based indices of relaxed metrics in the final selection.
    pub relaxed_metric_indices: Vec<usize>,
    /// Present when `status` is `Solved`.
    pub solution: Option<Solution>,
    pub iteration_log: Vec<IterationRecord>,
    pub ranking: RankedList,
}

/// Build the starting selection vector from the ranking.
pub fn initialize_selection(
    ranked: &RankedList,
    policy: &InitializationPolicy,
) -> Result<SelectionVector> {
    let m = ranked.order.len();
    match policy {
        InitializationPolicy::AllHard => Ok(SelectionVector::all_hard(m)),
        InitializationPolicy::PreRelaxBottomK(k) => {
            if *k > m {
                return Err(CcdError::Contract(format!(
                    "cannot pre-relax {k} of {m} metrics"
                )));
            }
            let mut z = vec![true; m];
            for &metric in &ranked.order[m - k..] {
                z[metric] = false;
            }
            Ok(SelectionVector(z))
        }
    }
}

/// Move up the ranked list by `rows` and relax every metric at or below the
/// new position. With no metric relaxed yet, this relaxes the `rows`
/// last-ranked metrics.
pub fn advance_selection(
    current: &SelectionVector,
    ranked: &RankedList,
    rows: usize,
) -> Result<SelectionVector> {
    if rows == 0 {
        return Err(CcdError::Contract("rows_per_advance must be positive".into()));
    }
    let m = ranked.order.len();
    if current.is_all_relaxed() {
        return Err(CcdError::Contract(
            "every metric is already relaxed; the loop must terminate instead".into(),
        ));
    }
    // 1-based position in ranked order of the best-ranked relaxed metric,
    // m+1 when nothing is relaxed yet.
    let first_relaxed_pos = ranked
        .order
        .iter()
        .position(|&metric| !current.is_hard(metric))
        .map(|p| p + 1)
        .unwrap_or(m + 1);
    let new_first = first_relaxed_pos.saturating_sub(rows).max(1);
    let mut z = vec![true; m];
    for &metric in &ranked.order[new_first - 1..] {
        z[metric] = false;
    }
    Ok(SelectionVector(z))
}

/// Run the full loop: rank, initialize, and solve with progressively relaxed
/// selections. Terminates after at most `ceil(M / rows) + 1` solver calls.
pub fn run_framework(
    problem: &CCDProblemInstance,
    config: &FrameworkConfig,
) -> Result<FrameworkResult> {
    let m = problem.num_metrics();
    let weights = match &config.weights {
        Some(w) => w.clone(),
        None => vec![1.0; m],
    };
    let ranking = rank_problem_metrics(problem, &config.ranking_scheme)?;
    let mut selection = initialize_selection(&ranking, &config.initialization_policy)?;
    let mut iteration_log = Vec::new();

    loop {
        let reduced = ReducedProblem::new(problem, selection.clone(), weights.clone())?;
        let outcome = solve_reduced(&reduced, &config.solver)?;
        iteration_log.push(IterationRecord {
            selection: selection.clone(),
            status: outcome.status,
            objective: outcome.objective,
        });

        match outcome.status {
            SolveStatus::Feasible => {
                let design = outcome.best_design.expect("feasible outcome carries a design");
                let (trajectory, classification) = reduced.classify_design_full(&design)?;
                return Ok(FrameworkResult {
                    status: FrameworkStatus::Solved,
                    relaxed_metric_indices: selection.relaxed_indices(),
                    final_selection: selection,
                    solution: Some(Solution {
                        design,
                        trajectory,
                        metric_report: classification.report,
                        slacks: classification.slacks,
                        objective: classification.objective,
                    }),
                    iteration_log,
                    ranking,
                });
            }
            SolveStatus::Infeasible => {
                if selection.is_all_relaxed() {
                    return Ok(FrameworkResult {
                        status: FrameworkStatus::IrreduciblyInfeasible,
                        relaxed_metric_indices: selection.relaxed_indices(),
                        final_selection: selection,
                        solution: None,
                        iteration_log,
                        ranking,
                    });
                }
                selection = advance_selection(&selection, &ranking, config.rows_per_advance)?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microgrid::{build_microgrid, MicrogridParams};
    use crate::ranking::rank_metrics;

    fn ranked_fixture() -> RankedList {
        // order [mu2, mu4, mu3, mu1] as produced by the reference sweep
        rank_metrics(&[5, 0, 4, 1], 5)
    }

    #[test]
    fn initialize_all_hard() {
        let z = initialize_selection(&ranked_fixture(), &InitializationPolicy::AllHard).unwrap();
        assert_eq!(z, SelectionVector::all_hard(4));
    }

    #[test]
    fn initialize_pre_relax_bottom_one() {
        let z = initialize_selection(
            &ranked_fixture(),
            &InitializationPolicy::PreRelaxBottomK(1),
        )
        .unwrap();
        assert_eq!(z.to_bitstring(), "0111");
    }

    #[test]
    fn initialize_pre_relax_zero_equals_all_hard() {
        let z = initialize_selection(
            &ranked_fixture(),
            &InitializationPolicy::PreRelaxBottomK(0),
        )
        .unwrap();
        assert_eq!(z, SelectionVector::all_hard(4));
    }

    #[test]
    fn initialize_rejects_excess_k() {
        assert!(initialize_selection(
            &ranked_fixture(),
            &InitializationPolicy::PreRelaxBottomK(5)
        )
        .is_err());
    }

    #[test]
    fn advance_from_all_hard_relaxes_last_ranked() {
        let ranked = ranked_fixture();
        let z = advance_selection(&SelectionVector::all_hard(4), &ranked, 1).unwrap();
        assert_eq!(z.to_bitstring(), "0111");
    }

    #[test]
    fn advance_again_relaxes_mu3_too() {
        let ranked = ranked_fixture();
        let z = SelectionVector::from_bitstring("0111").unwrap();
        let z = advance_selection(&z, &ranked, 1).unwrap();
        assert_eq!(z.to_bitstring(), "0101");
    }

    #[test]
    fn advance_whole_list_in_one_jump() {
        let ranked = ranked_fixture();
        let z = advance_selection(&SelectionVector::all_hard(4), &ranked, 4).unwrap();
        assert_eq!(z.to_bitstring(), "0000");
    }

    #[test]
    fn advance_rejects_fully_relaxed_input() {
        let ranked = ranked_fixture();
        assert!(advance_selection(&SelectionVector::all_relaxed(4), &ranked, 1).is_err());
    }

    #[test]
    fn four_metric_run_relaxes_mu1_and_mu3_in_three_solves() {
        let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
        assert_eq!(result.status, FrameworkStatus::Solved);
        assert_eq!(result.relaxed_metric_indices, vec![0, 2]);
        assert_eq!(result.iteration_log.len(), 3);
        let bits: Vec<String> = result
            .iteration_log
            .iter()
            .map(|r| r.selection.to_bitstring())
            .collect();
        assert_eq!(bits, vec!["1111", "0111", "0101"]);
        let solution = result.solution.unwrap();
        // mu2 and mu4 stay within their original bounds at the solution.
        assert!(solution.metric_report.values[1] <= 20.0 + 1e-6);
        assert!(solution.metric_report.values[3] <= 5.0 + 1e-6);
    }

    #[test]
    fn two_metric_run_relaxes_mu1_only() {
        let problem = build_microgrid(&MicrogridParams::two_metric()).unwrap();
        let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
        assert_eq!(result.status, FrameworkStatus::Solved);
        assert_eq!(result.relaxed_metric_indices, vec![0]);
        let solution = result.solution.unwrap();
        assert!(solution.metric_report.within_bounds[1]);
    }

    #[test]
    fn loose_bounds_solve_in_one_iteration_with_nothing_relaxed() {
        let mut params = MicrogridParams::four_metric();
        params.metric_bounds = Some(vec![(-1e9, 1e9); 4]);
        let problem = build_microgrid(&params).unwrap();
        let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
        assert_eq!(result.status, FrameworkStatus::Solved);
        assert!(result.relaxed_metric_indices.is_empty());
        assert_eq!(result.iteration_log.len(), 1);
        assert_eq!(result.solution.unwrap().objective, 0.0);
    }

    #[test]
    fn structurally_infeasible_problem_is_reported_as_irreducible() {
        // Shrink the input box so far that every design violates it.
        let mut params = MicrogridParams::four_metric();
        params.input_bounds = (0.0, 0.5);
        let problem = build_microgrid(&params).unwrap();
        let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
        assert_eq!(result.status, FrameworkStatus::IrreduciblyInfeasible);
        assert!(result.final_selection.is_all_relaxed());
        assert!(result.solution.is_none());
    }

    #[test]
    fn relaxed_sets_grow_monotonically() {
        let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
        let mut previous: Option<Vec<usize>> = None;
        for record in &result.iteration_log {
            let relaxed = record.selection.relaxed_indices();
            if let Some(prev) = &previous {
                assert!(prev.iter().all(|i| relaxed.contains(i)));
                assert!(relaxed.len() > prev.len());
            }
            previous = Some(relaxed);
        }
    }

    #[test]
    fn termination_bound_holds_for_larger_strides() {
        let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        for rows in 1..=4 {
            let config = FrameworkConfig {
                rows_per_advance: rows,
                ..FrameworkConfig::default()
            };
            let result = run_framework(&problem, &config).unwrap();
            let m = 4usize;
            let bound = m.div_ceil(rows) + 1;
            assert!(result.iteration_log.len() <= bound);
            assert_eq!(result.status, FrameworkStatus::Solved);
        }
    }
}
