//! Text emission for CLI results: comma-delimited CSV with `.` decimal points,
//! LF line endings, and a header row, or JSON. Machine-readable outputs carry
//! full precision; human-oriented tables round to 4 significant figures.

use crate::baseline::{BaselineReport, TrialOutcome};
use crate::framework::{FrameworkResult, FrameworkStatus};
use crate::problem::{CCDProblemInstance, DesignPoint, Result};
use crate::ranking::{generate_candidates, CandidateScheme, RankedList};
use crate::solver::{SolveOutcome, SolveStatus};
use serde_json::json;
use std::fmt::Write as _;

/// Shortest round-trip representation; byte-identical across runs.
pub fn full(x: f64) -> String {
    format!("{x}")
}

/// Round to `sig` significant figures for human-readable tables.
pub fn sig_figs(x: f64, sig: u32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// The reference candidate sweep rows: test index, theta, and metric values.
pub fn sweep_rows(problem: &CCDProblemInstance) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    let candidates = generate_candidates(problem, &CandidateScheme::reference_sweep())?;
    candidates
        .iter()
        .enumerate()
        .map(|(i, design)| {
            let (_, report) = problem.evaluate_design(design)?;
            Ok((i + 1, design.theta[0], report.values))
        })
        .collect()
}

pub fn sweep_csv(problem: &CCDProblemInstance) -> Result<String> {
    let rows = sweep_rows(problem)?;
    let m = problem.num_metrics();
    let mut out = String::from("candidate,theta");
    for i in 1..=m {
        write!(out, ",mu{i}").unwrap();
    }
    out.push('\n');
    for (test, theta, values) in rows {
        write!(out, "{test},{}", full(theta)).unwrap();
        for v in values {
            write!(out, ",{}", full(v)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

fn metric_label(index: usize) -> String {
    format!("mu{}", index + 1)
}

pub fn ranking_csv(ranked: &RankedList) -> String {
    let mut out = String::from("rank,metric,violations\n");
    for (pos, (metric, count)) in ranked.order.iter().zip(&ranked.counts).enumerate() {
        writeln!(out, "{},{},{count}", pos + 1, metric_label(*metric)).unwrap();
    }
    writeln!(out, "candidates_evaluated,{},", ranked.candidates_evaluated).unwrap();
    out
}

pub fn ranking_json(ranked: &RankedList) -> String {
    let value = json!({
        "order": ranked.order.iter().map(|m| m + 1).collect::<Vec<_>>(),
        "labels": ranked.order.iter().map(|m| metric_label(*m)).collect::<Vec<_>>(),
        "counts": ranked.counts,
        "candidates_evaluated": ranked.candidates_evaluated,
    });
    serde_json::to_string_pretty(&value).unwrap() + "\n"
}

fn design_json(design: &DesignPoint) -> serde_json::Value {
    json!({ "theta": design.theta, "phi": design.phi })
}

pub fn framework_json(result: &FrameworkResult) -> String {
    let status = match result.status {
        FrameworkStatus::Solved => "SOLVED",
        FrameworkStatus::IrreduciblyInfeasible => "IRREDUCIBLY_INFEASIBLE",
    };
    let iterations: Vec<_> = result
        .iteration_log
        .iter()
        .map(|r| {
            json!({
                "selection": r.selection.to_bitstring(),
                "status": match r.status {
                    SolveStatus::Feasible => "FEASIBLE",
                    SolveStatus::Infeasible => "INFEASIBLE",
                },
                "objective": r.objective,
            })
        })
        .collect();
    let value = json!({
        "status": status,
        "relaxed_metrics": result.relaxed_metric_indices.iter().map(|m| m + 1).collect::<Vec<_>>(),
        "final_selection": result.final_selection.to_bitstring(),
        "iterations": result.iteration_log.len(),
        "iteration_log": iterations,
        "ranking": result.ranking.order.iter().map(|m| m + 1).collect::<Vec<_>>(),
        "solution": result.solution.as_ref().map(|s| json!({
            "design": design_json(&s.design),
            "metric_values": s.metric_report.values,
            "within_bounds": s.metric_report.within_bounds,
            "slacks": s.slacks,
            "objective": s.objective,
            "states": s.trajectory.states,
            "inputs": s.trajectory.inputs,
        })),
    });
    serde_json::to_string_pretty(&value).unwrap() + "\n"
}

pub fn framework_csv(result: &FrameworkResult) -> String {
    let mut out = String::from("key,value\n");
    let status = match result.status {
        FrameworkStatus::Solved => "SOLVED",
        FrameworkStatus::IrreduciblyInfeasible => "IRREDUCIBLY_INFEASIBLE",
    };
    writeln!(out, "status,{status}").unwrap();
    writeln!(out, "final_selection,{}", result.final_selection.to_bitstring()).unwrap();
    let relaxed: Vec<String> = result
        .relaxed_metric_indices
        .iter()
        .map(|m| metric_label(*m))
        .collect();
    writeln!(out, "relaxed_metrics,{}", relaxed.join(" ")).unwrap();
    writeln!(out, "iterations,{}", result.iteration_log.len()).unwrap();
    if let Some(s) = &result.solution {
        writeln!(out, "theta,{}", full(s.design.theta[0])).unwrap();
        writeln!(out, "phi,{}", full(s.design.phi[0])).unwrap();
        for (i, v) in s.metric_report.values.iter().enumerate() {
            writeln!(out, "{},{}", metric_label(i), full(*v)).unwrap();
        }
        writeln!(out, "objective,{}", full(s.objective)).unwrap();
    }
    out
}

pub fn oracle_json(outcome: &SolveOutcome, selection_bits: &str) -> String {
    let value = json!({
        "selection": selection_bits,
        "status": match outcome.status {
            SolveStatus::Feasible => "FEASIBLE",
            SolveStatus::Infeasible => "INFEASIBLE",
        },
        "design": outcome.best_design.as_ref().map(design_json),
        "objective": outcome.objective,
        "best_infeasible": outcome.best_infeasible.as_ref().map(|(d, v)| json!({
            "design": design_json(d),
            "worst_hard_violation": v,
        })),
        "evaluations": outcome.evaluations,
    });
    serde_json::to_string_pretty(&value).unwrap() + "\n"
}

pub fn oracle_csv(outcome: &SolveOutcome, selection_bits: &str) -> String {
    let mut out = String::from("key,value\n");
    writeln!(out, "selection,{selection_bits}").unwrap();
    match outcome.status {
        SolveStatus::Feasible => {
            writeln!(out, "status,FEASIBLE").unwrap();
            let d = outcome.best_design.as_ref().unwrap();
            writeln!(out, "theta,{}", full(d.theta[0])).unwrap();
            writeln!(out, "phi,{}", full(d.phi[0])).unwrap();
            writeln!(out, "objective,{}", full(outcome.objective.unwrap())).unwrap();
        }
        SolveStatus::Infeasible => {
            writeln!(out, "status,INFEASIBLE").unwrap();
            if let Some((d, v)) = &outcome.best_infeasible {
                writeln!(out, "least_violating_theta,{}", full(d.theta[0])).unwrap();
                writeln!(out, "least_violating_phi,{}", full(d.phi[0])).unwrap();
                writeln!(out, "worst_hard_violation,{}", full(*v)).unwrap();
            }
        }
    }
    writeln!(out, "evaluations,{}", outcome.evaluations).unwrap();
    out
}

pub fn baseline_csv(report: &BaselineReport, m: usize) -> String {
    let mut out = String::from("trial");
    for i in 1..=m {
        write!(out, ",w{i}").unwrap();
    }
    for i in 1..=m {
        write!(out, ",mu{i}").unwrap();
    }
    out.push_str(",theta,phi,in_bounds_count\n");
    for trial in &report.trials {
        write!(out, "{}", trial.index).unwrap();
        for w in &trial.weights {
            write!(out, ",{}", full(*w)).unwrap();
        }
        match &trial.outcome {
            TrialOutcome::Solved {
                design,
                metric_values,
                in_bounds_count,
            } => {
                for v in metric_values {
                    write!(out, ",{}", full(*v)).unwrap();
                }
                write!(out, ",{}", full(design.theta[0])).unwrap();
                write!(out, ",{}", full(design.phi[0])).unwrap();
                writeln!(out, ",{in_bounds_count}").unwrap();
            }
            TrialOutcome::Failed { .. } => {
                for _ in 0..m + 2 {
                    out.push(',');
                }
                out.push_str("failed\n");
            }
        }
    }
    writeln!(out, "max_in_bounds,{}", report.max_in_bounds).unwrap();
    writeln!(out, "trials_achieving_max,{}", report.trials_achieving_max).unwrap();
    out
}

/// Histogram analog of the trials-versus-in-bounds-count figure.
pub fn baseline_histogram_csv(report: &BaselineReport) -> String {
    let mut out = String::from("in_bounds_count,trials\n");
    for (count, trials) in report.histogram.iter().enumerate() {
        writeln!(out, "{count},{trials}").unwrap();
    }
    out
}

pub fn baseline_json(report: &BaselineReport) -> String {
    serde_json::to_string_pretty(report).unwrap() + "\n"
}
