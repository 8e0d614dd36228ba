//! JSON run-configuration schema for the CLI. One self-describing file pins an
//! experiment; missing keys take the documented defaults and unknown keys are
//! rejected.

use crate::framework::{FrameworkConfig, InitializationPolicy};
use crate::microgrid::{build_microgrid, MicrogridParams, MicrogridVariant};
use crate::problem::{CCDProblemInstance, CcdError, Result};
use crate::ranking::CandidateScheme;
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solver: SolverSection,
    pub ranking: RankingSection,
    pub framework: FrameworkSection,
    pub baseline: BaselineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub kind: String,
    pub variant: String,
    pub horizon: usize,
    pub initial_state: f64,
    pub reference_state: f64,
    pub input_bounds: [f64; 2],
    pub theta_bounds: [f64; 2],
    pub phi_bounds: [f64; 2],
    /// Per-metric bound/weight overrides; `None` takes the variant defaults.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricConfig>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: "microgrid".into(),
            variant: "four-metric".into(),
            horizon: 3,
            initial_state: 10.0,
            reference_state: 20.0,
            input_bounds: [0.0, 7.0],
            theta_bounds: [0.1, 0.5],
            phi_bounds: [0.1, 0.5],
            metrics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub lb: f64,
    pub ub: f64,
    pub weight: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub grid_resolution: usize,
    pub refinement: bool,
    pub feasibility_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            grid_resolution: 201,
            refinement: true,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankingSection {
    /// "grid" or "uniform-random".
    pub kind: String,
    pub theta_points: usize,
    pub phi_points: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RankingSection {
    fn default() -> Self {
        Self {
            kind: "grid".into(),
            theta_points: 5,
            phi_points: 1,
            samples: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameworkSection {
    /// "all-hard" or "pre-relax-bottom-k".
    pub init: String,
    /// k for the pre-relax policy; ignored under "all-hard".
    pub pre_relax_k: usize,
    pub rows_per_advance: usize,
}

impl Default for FrameworkSection {
    fn default() -> Self {
        Self {
            init: "all-hard".into(),
            pre_relax_k: 0,
            rows_per_advance: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub weight_levels: Vec<f64>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            weight_levels: vec![0.0, 0.25, 0.75, 1.0],
        }
    }
}

fn check_ordered(name: &str, pair: [f64; 2], errors: &mut Vec<String>) {
    if pair[0] > pair[1] {
        errors.push(format!(
            "{name}: lower bound {} exceeds upper bound {}",
            pair[0], pair[1]
        ));
    }
}

/// Parse and validate a configuration. All schema errors are collected and
/// reported together with their key paths.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text)
        .map_err(|e| CcdError::InvalidProblem(format!("config parse error: {e}")))?;
    let mut errors = Vec::new();

    if config.problem.kind != "microgrid" {
        errors.push(format!(
            "problem.kind: unknown kind {:?}, expected \"microgrid\"",
            config.problem.kind
        ));
    }
    if !matches!(config.problem.variant.as_str(), "two-metric" | "four-metric") {
        errors.push(format!(
            "problem.variant: unknown variant {:?}, expected \"two-metric\" or \"four-metric\"",
            config.problem.variant
        ));
    }
    if config.problem.horizon < 2 {
        errors.push(format!(
            "problem.horizon: must be at least 2, got {}",
            config.problem.horizon
        ));
    }
    check_ordered("problem.input_bounds", config.problem.input_bounds, &mut errors);
    check_ordered("problem.theta_bounds", config.problem.theta_bounds, &mut errors);
    check_ordered("problem.phi_bounds", config.problem.phi_bounds, &mut errors);
    if let Some(metrics) = &config.problem.metrics {
        for (i, m) in metrics.iter().enumerate() {
            if m.lb > m.ub {
                errors.push(format!(
                    "problem.metrics[{i}]: lower bound {} exceeds upper bound {}",
                    m.lb, m.ub
                ));
            }
            if m.weight < 0.0 {
                errors.push(format!(
                    "problem.metrics[{i}].weight: must be nonnegative, got {}",
                    m.weight
                ));
            }
        }
    }
    if config.solver.grid_resolution < 2 {
        errors.push(format!(
            "solver.grid_resolution: must be at least 2, got {}",
            config.solver.grid_resolution
        ));
    }
    if config.solver.feasibility_tol < 0.0 {
        errors.push(format!(
            "solver.feasibility_tol: must be nonnegative, got {}",
            config.solver.feasibility_tol
        ));
    }
    match config.ranking.kind.as_str() {
        "grid" => {
            if config.ranking.theta_points == 0 || config.ranking.phi_points == 0 {
                errors.push("ranking: grid schemes need at least one point per dimension".into());
            }
        }
        "uniform-random" => {
            if config.ranking.samples == 0 {
                errors.push("ranking.samples: must be positive".into());
            }
        }
        other => errors.push(format!(
            "ranking.kind: unknown kind {other:?}, expected \"grid\" or \"uniform-random\""
        )),
    }
    match config.framework.init.as_str() {
        "all-hard" | "pre-relax-bottom-k" => {}
        other => errors.push(format!(
            "framework.init: unknown policy {other:?}, expected \"all-hard\" or \"pre-relax-bottom-k\""
        )),
    }
    if config.framework.rows_per_advance == 0 {
        errors.push("framework.rows_per_advance: must be positive".into());
    }
    if config.baseline.weight_levels.is_empty() {
        errors.push("baseline.weight_levels: must be nonempty".into());
    }

    if errors.is_empty() {
        Ok(config)
    } else {
        Err(CcdError::InvalidProblem(errors.join("; ")))
    }
}

impl RunConfig {
    /// Build the problem instance together with the per-metric weights.
    pub fn build_problem(&self) -> Result<(CCDProblemInstance, Vec<f64>)> {
        let variant = match self.problem.variant.as_str() {
            "two-metric" => MicrogridVariant::TwoMetric,
            _ => MicrogridVariant::FourMetric,
        };
        let params = MicrogridParams {
            initial_charge: self.problem.initial_state,
            reference_state: self.problem.reference_state,
            horizon: self.problem.horizon,
            input_bounds: (self.problem.input_bounds[0], self.problem.input_bounds[1]),
            theta_bounds: (self.problem.theta_bounds[0], self.problem.theta_bounds[1]),
            phi_bounds: (self.problem.phi_bounds[0], self.problem.phi_bounds[1]),
            metric_bounds: self
                .problem
                .metrics
                .as_ref()
                .map(|ms| ms.iter().map(|m| (m.lb, m.ub)).collect()),
            variant,
            tolerance: self.solver.feasibility_tol,
        };
        let problem = build_microgrid(&params)?;
        let weights = match &self.problem.metrics {
            Some(ms) => ms.iter().map(|m| m.weight).collect(),
            None => vec![1.0; problem.num_metrics()],
        };
        Ok((problem, weights))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            grid_resolution: self.solver.grid_resolution,
            refinement_enabled: self.solver.refinement,
            feasibility_tolerance: self.solver.feasibility_tol,
            ..SolverConfig::default()
        }
    }

    pub fn ranking_scheme(&self) -> CandidateScheme {
        match self.ranking.kind.as_str() {
            "uniform-random" => CandidateScheme::UniformRandom {
                samples: self.ranking.samples,
                seed: self.ranking.seed,
            },
            _ => CandidateScheme::Grid {
                theta_points: self.ranking.theta_points,
                phi_points: self.ranking.phi_points,
            },
        }
    }

    pub fn framework_config(&self) -> FrameworkConfig {
        let initialization_policy = match self.framework.init.as_str() {
            "pre-relax-bottom-k" => InitializationPolicy::PreRelaxBottomK(self.framework.pre_relax_k),
            _ => InitializationPolicy::AllHard,
        };
        FrameworkConfig {
            initialization_policy,
            rows_per_advance: self.framework.rows_per_advance,
            weights: None,
            solver: self.solver_config(),
            ranking_scheme: self.ranking_scheme(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_takes_defaults() {
        let config = parse_config("{}").unwrap();
        assert_eq!(config, RunConfig::default());
        let (problem, weights) = config.build_problem().unwrap();
        assert_eq!(problem.num_metrics(), 4);
        assert_eq!(weights, vec![1.0; 4]);
        assert_eq!(problem.metric_bounds()[2], (0.0, 0.1));
    }

    #[test]
    fn inverted_theta_bounds_name_the_key() {
        let err = parse_config(r#"{"problem": {"theta_bounds": [0.5, 0.1]}}"#).unwrap_err();
        assert!(err.to_string().contains("theta_bounds"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config(r#"{"problem": {"frobnicate": 1}}"#).is_err());
        assert!(parse_config(r#"{"unknown_section": {}}"#).is_err());
    }

    #[test]
    fn round_trip_preserves_configuration() {
        let config = parse_config(
            r#"{
                "problem": {"variant": "two-metric", "horizon": 4},
                "solver": {"grid_resolution": 101},
                "ranking": {"kind": "uniform-random", "samples": 12, "seed": 3},
                "framework": {"init": "pre-relax-bottom-k", "pre_relax_k": 1},
                "baseline": {"weight_levels": [0.0, 1.0]}
            }"#,
        )
        .unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let reparsed = parse_config(&text).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn metric_overrides_flow_through() {
        let config = parse_config(
            r#"{"problem": {"metrics": [
                {"lb": 0, "ub": 9, "weight": 2.0},
                {"lb": 0, "ub": 21},
                {"lb": 0, "ub": 0.2},
                {"lb": 0, "ub": 6}
            ]}}"#,
        )
        .unwrap();
        let (problem, weights) = config.build_problem().unwrap();
        assert_eq!(problem.metric_bounds()[0], (0.0, 9.0));
        assert_eq!(weights[0], 2.0);
        assert_eq!(weights[1], 1.0);
    }
}
