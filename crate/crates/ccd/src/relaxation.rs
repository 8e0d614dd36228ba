//! Slack/selection reformulation of metric bounds.
//!
//! Each metric m gets a binary selection variable z_m (1 = hard bound, 0 =
//! relaxed through a nonnegative slack s_m) and the objective becomes the
//! weighted sum of squared slacks. Slacks are never carried as solver decision
//! variables: for a fixed design the metric values are determined, and the
//! smallest slack satisfying both inequality rows is exactly the violation
//! magnitude `max(0, lb - mu, mu - ub)`. That closed form is substituted
//! everywhere and its optimality is property-tested.

use crate::problem::{
    CCDProblemInstance, CcdError, DesignPoint, MetricReport, Result, Trajectory,
};
use serde::Serialize;

/// Binary per-metric switch: `true` keeps the bound hard, `false` relaxes it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SelectionVector(pub Vec<bool>);

impl SelectionVector {
    pub fn all_hard(m: usize) -> Self {
        Self(vec![true; m])
    }

    pub fn all_relaxed(m: usize) -> Self {
        Self(vec![false; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_hard(&self, m: usize) -> bool {
        self.0[m]
    }

    pub fn is_all_relaxed(&self) -> bool {
        self.0.iter().all(|z| !z)
    }

    /// 0-based indices of relaxed metrics.
    pub fn relaxed_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, z)| (!z).then_some(i))
            .collect()
    }

    /// Parse a bitstring such as `0101`, one character per metric, `1` = hard.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut z = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '1' => z.push(true),
                '0' => z.push(false),
                other => {
                    return Err(CcdError::Contract(format!(
                        "selection bitstring may contain only 0 and 1, found {other:?}"
                    )))
                }
            }
        }
        if z.is_empty() {
            return Err(CcdError::Contract("selection bitstring is empty".into()));
        }
        Ok(Self(z))
    }

    pub fn to_bitstring(&self) -> String {
        self.0.iter().map(|z| if *z { '1' } else { '0' }).collect()
    }
}

/// Optimal slack per metric: the violation magnitude for relaxed metrics, zero
/// for hard ones.
pub fn optimal_slacks(report: &MetricReport, selection: &SelectionVector) -> Result<Vec<f64>> {
    if report.violations.len() != selection.len() {
        return Err(CcdError::DimensionMismatch(format!(
            "metric report has {} metrics, selection has {}",
            report.violations.len(),
            selection.len()
        )));
    }
    Ok(report
        .violations
        .iter()
        .zip(&selection.0)
        .map(|(v, hard)| if *hard { 0.0 } else { *v })
        .collect())
}

/// Weighted squared-slack objective `J = sum_m w_m s_m^2`.
pub fn relaxed_objective(slacks: &[f64], weights: &[f64]) -> Result<f64> {
    if slacks.len() != weights.len() {
        return Err(CcdError::DimensionMismatch(format!(
            "{} slacks but {} weights",
            slacks.len(),
            weights.len()
        )));
    }
    for (m, s) in slacks.iter().enumerate() {
        if *s < 0.0 {
            return Err(CcdError::Contract(format!(
                "slack {s} for metric {} is negative",
                m + 1
            )));
        }
    }
    for (m, w) in weights.iter().enumerate() {
        if *w < 0.0 {
            return Err(CcdError::Contract(format!(
                "weight {w} for metric {} is negative",
                m + 1
            )));
        }
    }
    Ok(slacks
        .iter()
        .zip(weights)
        .map(|(s, w)| w * s * s)
        .sum())
}

/// Full classification of one design under a selection vector.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub objective: f64,
    /// True iff every hard metric and every input bound is satisfied within
    /// tolerance.
    pub feasible_under_selection: bool,
    pub report: MetricReport,
    pub slacks: Vec<f64>,
    /// Largest violation among hard metrics and input bounds; zero when
    /// feasible. Drives infeasibility-repair refinement in the solver.
    pub worst_hard_violation: f64,
}

/// A CCD problem reduced by a selection vector and slack weights: evaluating a
/// design yields the relaxed objective and a hard-feasibility verdict.
pub struct ReducedProblem<'a> {
    problem: &'a CCDProblemInstance,
    selection: SelectionVector,
    weights: Vec<f64>,
}

impl<'a> ReducedProblem<'a> {
    /// Framework entry point: weights must be strictly positive.
    pub fn new(
        problem: &'a CCDProblemInstance,
        selection: SelectionVector,
        weights: Vec<f64>,
    ) -> Result<Self> {
        for (m, w) in weights.iter().enumerate() {
            if w.is_nan() || *w <= 0.0 {
                return Err(CcdError::Contract(format!(
                    "weight for metric {} must be strictly positive, got {w}",
                    m + 1
                )));
            }
        }
        Self::with_nonnegative_weights(problem, selection, weights)
    }

    /// Baseline entry point: zero weights are permitted, every weight level in
    /// the sweep set is legal.
    pub fn with_nonnegative_weights(
        problem: &'a CCDProblemInstance,
        selection: SelectionVector,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let m = problem.num_metrics();
        if selection.len() != m {
            return Err(CcdError::DimensionMismatch(format!(
                "selection has {} entries for {m} metrics",
                selection.len()
            )));
        }
        if weights.len() != m {
            return Err(CcdError::DimensionMismatch(format!(
                "{} weights for {m} metrics",
                weights.len()
            )));
        }
        for (i, w) in weights.iter().enumerate() {
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(CcdError::Contract(format!(
                    "weight for metric {} must be finite and nonnegative, got {w}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            problem,
            selection,
            weights,
        })
    }

    pub fn problem(&self) -> &CCDProblemInstance {
        self.problem
    }

    pub fn selection(&self) -> &SelectionVector {
        &self.selection
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Simulate, evaluate metrics, substitute optimal slacks, and judge the
    /// design against the hard bounds.
    pub fn classify_design(&self, design: &DesignPoint) -> Result<Classification> {
        let (trajectory, report) = self.problem.evaluate_design(design)?;
        self.classify_evaluated(&trajectory, report)
    }

    /// As [`classify_design`](Self::classify_design) but returning the
    /// trajectory as well.
    pub fn classify_design_full(
        &self,
        design: &DesignPoint,
    ) -> Result<(Trajectory, Classification)> {
        let (trajectory, report) = self.problem.evaluate_design(design)?;
        let classification = self.classify_evaluated(&trajectory, report)?;
        Ok((trajectory, classification))
    }

    fn classify_evaluated(
        &self,
        trajectory: &Trajectory,
        report: MetricReport,
    ) -> Result<Classification> {
        let tol = self.problem.tolerance();
        let slacks = optimal_slacks(&report, &self.selection)?;
        let objective = relaxed_objective(&slacks, &self.weights)?;

        let input_check = self.problem.check_input_bounds(trajectory)?;
        let hard_metric_violation = report
            .violations
            .iter()
            .zip(&self.selection.0)
            .filter_map(|(v, hard)| hard.then_some(*v))
            .fold(0.0, f64::max);
        let worst_hard_violation = hard_metric_violation.max(input_check.worst_violation);
        let feasible = worst_hard_violation <= tol;

        Ok(Classification {
            objective,
            feasible_under_selection: feasible,
            report,
            slacks,
            worst_hard_violation,
        })
    }
}
