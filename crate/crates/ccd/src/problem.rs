//! Discrete-time control co-design problems and their single-shooting evaluation.
//!
//! A [`CCDProblemInstance`] couples a dynamics map, a control law, and a set of
//! featured metrics, all subject to box bounds. States, inputs, and metrics are
//! never independent decision variables: given a [`DesignPoint`] they are fully
//! determined by rolling the dynamics forward from the initial state, so every
//! downstream solve reduces to a low-dimensional box problem over the design
//! variables alone.

use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

/// Absolute tolerance applied to every bound comparison.
///
/// Several reference solutions sit exactly on a bound (e.g. a metric equal to
/// its upper limit after a floating-point division), and must classify as
/// satisfied.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CcdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value produced during rollout at step {step}")]
    NonFinite { step: usize },
    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, CcdError>;

/// Elementwise lower/upper box bounds on a real vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CcdError::InvalidProblem(format!(
                "bounds dimension mismatch: lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lb, ub)) in lower.iter().zip(&upper).enumerate() {
            if lb > ub {
                return Err(CcdError::InvalidProblem(format!(
                    "lower bound {lb} exceeds upper bound {ub} at component {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn scalar(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// True iff every component of `x` lies inside the box up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lb, ub))| *v >= lb - tol && *v <= ub + tol)
    }

    /// Largest bound violation over all components, zero when inside.
    pub fn worst_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lb, ub))| (lb - v).max(v - ub).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Plant design vector θ and controller design vector φ: the reduced decision
/// space after single-shooting elimination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignPoint {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl DesignPoint {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Self {
        Self { theta, phi }
    }

    pub fn scalar(theta: f64, phi: f64) -> Self {
        Self::new(vec![theta], vec![phi])
    }
}

/// Rollout produced by [`CCDProblemInstance::simulate`]: `states` has length N,
/// `inputs` length N-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

/// Metric values, per-metric violation magnitudes, and in-bounds flags for one
/// evaluated design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub values: Vec<f64>,
    /// `max(0, lb - value, value - ub)` per metric.
    pub violations: Vec<f64>,
    pub within_bounds: Vec<bool>,
}

/// Outcome of checking a trajectory's inputs against the per-step bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputBoundCheck {
    pub within_bounds: bool,
    pub worst_violation: f64,
    /// 1-based step index of the worst violation, when one exists.
    pub worst_step: Option<usize>,
}

/// Arguments handed to the control law at step k. At k = 1 the previous state
/// is the initial state itself and the previous input is zero.
pub struct ControlContext<'a> {
    pub state: &'a [f64],
    pub previous_state: &'a [f64],
    pub previous_input: &'a [f64],
}

pub type DynamicsFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type ControlLawFn = Arc<dyn Fn(ControlContext<'_>, &[f64]) -> Vec<f64> + Send + Sync>;
pub type MetricFn = Arc<dyn Fn(&Trajectory, &[f64], &[f64]) -> f64 + Send + Sync>;

/// A nonlinear constraint-satisfaction CCD problem: find a design whose rollout
/// keeps every input and every featured metric inside its box bounds.
///
/// Immutable after construction; all evaluation methods are pure functions of
/// their arguments and safe for concurrent use.
pub struct CCDProblemInstance {
    horizon: usize,
    initial_state: Vec<f64>,
    dynamics: DynamicsFn,
    control_law: ControlLawFn,
    metric_maps: Vec<MetricFn>,
    input_bounds: Vec<Bounds>,
    theta_bounds: Bounds,
    phi_bounds: Bounds,
    metric_bounds: Vec<(f64, f64)>,
    tolerance: f64,
}

impl CCDProblemInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        horizon: usize,
        initial_state: Vec<f64>,
        dynamics: DynamicsFn,
        control_law: ControlLawFn,
        metric_maps: Vec<MetricFn>,
        input_bounds: Vec<Bounds>,
        theta_bounds: Bounds,
        phi_bounds: Bounds,
        metric_bounds: Vec<(f64, f64)>,
        tolerance: f64,
    ) -> Result<Self> {
        if horizon < 2 {
            return Err(CcdError::InvalidProblem(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        if metric_maps.is_empty() {
            return Err(CcdError::InvalidProblem(
                "at least one featured metric is required".into(),
            ));
        }
        if metric_maps.len() != metric_bounds.len() {
            return Err(CcdError::InvalidProblem(format!(
                "{} metric maps but {} metric bound pairs",
                metric_maps.len(),
                metric_bounds.len()
            )));
        }
        if input_bounds.len() != horizon - 1 {
            return Err(CcdError::InvalidProblem(format!(
                "expected {} per-step input bounds, got {}",
                horizon - 1,
                input_bounds.len()
            )));
        }
        let input_dim = input_bounds[0].dim();
        if input_bounds.iter().any(|b| b.dim() != input_dim) {
            return Err(CcdError::InvalidProblem(
                "input bounds must share one dimension across steps".into(),
            ));
        }
        for (m, (lb, ub)) in metric_bounds.iter().enumerate() {
            if lb > ub {
                return Err(CcdError::InvalidProblem(format!(
                    "metric {} has lower bound {lb} above upper bound {ub}",
                    m + 1
                )));
            }
        }
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(CcdError::InvalidProblem(format!(
                "feasibility tolerance must be finite and nonnegative, got {tolerance}"
            )));
        }
        Ok(Self {
            horizon,
            initial_state,
            dynamics,
            control_law,
            metric_maps,
            input_bounds,
            theta_bounds,
            phi_bounds,
            metric_bounds,
            tolerance,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_metrics(&self) -> usize {
        self.metric_maps.len()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn theta_bounds(&self) -> &Bounds {
        &self.theta_bounds
    }

    pub fn phi_bounds(&self) -> &Bounds {
        &self.phi_bounds
    }

    pub fn metric_bounds(&self) -> &[(f64, f64)] {
        &self.metric_bounds
    }

    pub fn input_bounds(&self) -> &[Bounds] {
        &self.input_bounds
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn check_design_dims(&self, design: &DesignPoint) -> Result<()> {
        if design.theta.len() != self.theta_bounds.dim() {
            return Err(CcdError::DimensionMismatch(format!(
                "theta has {} components, bounds expect {}",
                design.theta.len(),
                self.theta_bounds.dim()
            )));
        }
        if design.phi.len() != self.phi_bounds.dim() {
            return Err(CcdError::DimensionMismatch(format!(
                "phi has {} components, bounds expect {}",
                design.phi.len(),
                self.phi_bounds.dim()
            )));
        }
        Ok(())
    }

    /// Roll the closed loop forward from the initial state.
    ///
    /// At each step k the control law produces u_k from the current state
    /// (plus previous state and input), then the dynamics produce x_{k+1}.
    /// Deterministic: identical arguments give bit-identical trajectories.
    pub fn simulate(&self, design: &DesignPoint) -> Result<Trajectory> {
        self.check_design_dims(design)?;
        let steps = self.horizon - 1;
        let input_dim = self.input_bounds[0].dim();
        let zero_input = vec![0.0; input_dim];

        let mut states: Vec<Vec<f64>> = Vec::with_capacity(self.horizon);
        states.push(self.initial_state.clone());
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(steps);

        for k in 0..steps {
            let previous_state = if k == 0 { &states[0] } else { &states[k - 1] };
            let previous_input = if k == 0 { &zero_input } else { &inputs[k - 1] };
            let input = (self.control_law)(
                ControlContext {
                    state: &states[k],
                    previous_state,
                    previous_input,
                },
                &design.phi,
            );
            if input.len() != input_dim {
                return Err(CcdError::DimensionMismatch(format!(
                    "control law returned {} components at step {}, expected {input_dim}",
                    input.len(),
                    k + 1
                )));
            }
            if input.iter().any(|v| !v.is_finite()) {
                return Err(CcdError::NonFinite { step: k + 1 });
            }
            let next = (self.dynamics)(&states[k], &input, &design.theta);
            if next.len() != self.initial_state.len() {
                return Err(CcdError::DimensionMismatch(format!(
                    "dynamics returned {} components at step {}, expected {}",
                    next.len(),
                    k + 1,
                    self.initial_state.len()
                )));
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(CcdError::NonFinite { step: k + 1 });
            }
            inputs.push(input);
            states.push(next);
        }

        Ok(Trajectory { states, inputs })
    }

    /// Evaluate every featured metric on a trajectory and classify each value
    /// against its bounds.
    pub fn evaluate_metrics(&self, trajectory: &Trajectory, design: &DesignPoint) -> MetricReport {
        let values: Vec<f64> = self
            .metric_maps
            .iter()
            .map(|g| g(trajectory, &design.theta, &design.phi))
            .collect();
        let violations: Vec<f64> = values
            .iter()
            .zip(&self.metric_bounds)
            .map(|(v, (lb, ub))| (lb - v).max(v - ub).max(0.0))
            .collect();
        let within_bounds = violations.iter().map(|v| *v <= self.tolerance).collect();
        MetricReport {
            values,
            violations,
            within_bounds,
        }
    }

    /// Check every input component at every step against the per-step bounds.
    ///
    /// Input bounds are never relaxable: a violation here renders the design
    /// infeasible under any selection of metric bounds.
    pub fn check_input_bounds(&self, trajectory: &Trajectory) -> Result<InputBoundCheck> {
        if trajectory.inputs.len() != self.horizon - 1 {
            return Err(CcdError::DimensionMismatch(format!(
                "trajectory has {} inputs, horizon expects {}",
                trajectory.inputs.len(),
                self.horizon - 1
            )));
        }
        let mut worst = 0.0_f64;
        let mut worst_step = None;
        for (k, (input, bounds)) in trajectory.inputs.iter().zip(&self.input_bounds).enumerate() {
            let violation = bounds.worst_violation(input);
            if violation > worst {
                worst = violation;
                worst_step = Some(k + 1);
            }
        }
        Ok(InputBoundCheck {
            within_bounds: worst <= self.tolerance,
            worst_violation: worst,
            worst_step,
        })
    }

    /// Convenience: simulate, then evaluate metrics.
    pub fn evaluate_design(&self, design: &DesignPoint) -> Result<(Trajectory, MetricReport)> {
        let trajectory = self.simulate(design)?;
        let report = self.evaluate_metrics(&trajectory, design);
        Ok((trajectory, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microgrid::{build_microgrid, MicrogridParams};

    fn four_metric() -> CCDProblemInstance {
        build_microgrid(&MicrogridParams::four_metric()).unwrap()
    }

    #[test]
    fn simulate_microgrid_baseline_design() {
        let problem = four_metric();
        let traj = problem.simulate(&DesignPoint::scalar(0.1, 0.1)).unwrap();
        let states: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        let inputs: Vec<f64> = traj.inputs.iter().map(|u| u[0]).collect();
        assert_eq!(states, vec![10.0, 2.0, 2.0]);
        assert_eq!(inputs, vec![1.0, 1.8]);
    }

    #[test]
    fn simulate_zero_gain_gives_autonomous_decay() {
        // Controller gain zero: inputs vanish and the state decays by theta
        // each step. The gain sits outside the phi box, which simulate does
        // not police.
        let problem = four_metric();
        for theta in [0.1, 0.3, 0.5] {
            let traj = problem.simulate(&DesignPoint::scalar(theta, 0.0)).unwrap();
            let states: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
            let inputs: Vec<f64> = traj.inputs.iter().map(|u| u[0]).collect();
            assert_eq!(inputs, vec![0.0, 0.0]);
            assert!((states[0] - 10.0).abs() < 1e-12);
            assert!((states[1] - 10.0 * theta).abs() < 1e-12);
            assert!((states[2] - 10.0 * theta * theta).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_table_row_five() {
        let problem = four_metric();
        let traj = problem.simulate(&DesignPoint::scalar(0.5, 0.1)).unwrap();
        let states: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        let inputs: Vec<f64> = traj.inputs.iter().map(|u| u[0]).collect();
        assert!((states[1] - 6.0).abs() < 1e-12);
        assert!((states[2] - 4.4).abs() < 1e-12);
        assert!((inputs[0] - 1.0).abs() < 1e-12);
        assert!((inputs[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic() {
        let problem = four_metric();
        let design = DesignPoint::scalar(0.37, 0.24);
        let a = problem.simulate(&design).unwrap();
        let b = problem.simulate(&design).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulate_rejects_dimension_mismatch() {
        let problem = four_metric();
        let bad = DesignPoint::new(vec![0.1, 0.2], vec![0.1]);
        assert!(matches!(
            problem.simulate(&bad),
            Err(CcdError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn evaluate_metrics_matches_reference_rows() {
        let problem = four_metric();
        let cases = [
            (0.1, [10.0, 14.0, 0.1, 10.0]),
            (0.2, [10.7, 13.5, 0.2, 5.0]),
            (0.3, [11.2, 13.0, 0.3, 10.0 / 3.0]),
        ];
        for (theta, expected) in cases {
            let design = DesignPoint::scalar(theta, 0.1);
            let (_, report) = problem.evaluate_design(&design).unwrap();
            for (value, want) in report.values.iter().zip(expected) {
                assert!(
                    (value - want).abs() < 1e-9,
                    "theta={theta}: got {value}, want {want}"
                );
            }
        }
    }

    #[test]
    fn within_bounds_flags_at_theta_point_two() {
        let problem = four_metric();
        let (_, report) = problem
            .evaluate_design(&DesignPoint::scalar(0.2, 0.1))
            .unwrap();
        // mu4 = 1/0.2 = 5 sits exactly on its bound and must count as satisfied.
        assert_eq!(report.within_bounds, vec![false, true, false, true]);
    }

    #[test]
    fn input_bounds_met_exactly_at_boundary() {
        let problem = four_metric();
        let traj = problem.simulate(&DesignPoint::scalar(0.1, 0.5)).unwrap();
        let inputs: Vec<f64> = traj.inputs.iter().map(|u| u[0]).collect();
        assert_eq!(inputs, vec![5.0, 7.0]);
        let check = problem.check_input_bounds(&traj).unwrap();
        assert!(check.within_bounds);
    }

    #[test]
    fn interior_inputs_report_zero_violation() {
        let problem = four_metric();
        let traj = problem.simulate(&DesignPoint::scalar(0.1, 0.1)).unwrap();
        let check = problem.check_input_bounds(&traj).unwrap();
        assert!(check.within_bounds);
        assert_eq!(check.worst_violation, 0.0);
        assert_eq!(check.worst_step, None);
    }

    #[test]
    fn fabricated_out_of_bounds_input_is_flagged() {
        let problem = four_metric();
        let traj = Trajectory {
            states: vec![vec![10.0], vec![2.0], vec![2.0]],
            inputs: vec![vec![7.5], vec![1.0]],
        };
        let check = problem.check_input_bounds(&traj).unwrap();
        assert!(!check.within_bounds);
        assert!((check.worst_violation - 0.5).abs() < 1e-12);
        assert_eq!(check.worst_step, Some(1));
    }

    #[test]
    fn closed_form_metrics_hold_across_the_box() {
        // With x1=10, xr=20, N=3, eliminating the rollout by hand gives
        //   mu1 = 10 + 10(theta+phi)(1-theta+phi) - 20 phi
        //   mu2 = 5 phi (30 - 10(theta+phi))
        let problem = four_metric();
        let n = 23;
        for i in 0..n {
            for j in 0..n {
                let theta = 0.1 + 0.4 * i as f64 / (n - 1) as f64;
                let phi = 0.1 + 0.4 * j as f64 / (n - 1) as f64;
                let (_, report) = problem
                    .evaluate_design(&DesignPoint::scalar(theta, phi))
                    .unwrap();
                let mu1 = 10.0 + 10.0 * (theta + phi) * (1.0 - theta + phi) - 20.0 * phi;
                let mu2 = 5.0 * phi * (30.0 - 10.0 * (theta + phi));
                assert!((report.values[0] - mu1).abs() < 1e-12);
                assert!((report.values[1] - mu2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_rollout_names_the_step() {
        let dynamics: DynamicsFn = Arc::new(|x: &[f64], _u: &[f64], _t: &[f64]| vec![x[0] / 0.0]);
        let control: ControlLawFn = Arc::new(|_ctx, _phi: &[f64]| vec![0.0]);
        let metric: MetricFn = Arc::new(|_t: &Trajectory, _th: &[f64], _ph: &[f64]| 0.0);
        let problem = CCDProblemInstance::new(
            3,
            vec![1.0],
            dynamics,
            control,
            vec![metric],
            vec![Bounds::scalar(0.0, 1.0).unwrap(); 2],
            Bounds::scalar(0.0, 1.0).unwrap(),
            Bounds::scalar(0.0, 1.0).unwrap(),
            vec![(0.0, 1.0)],
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        match problem.simulate(&DesignPoint::scalar(0.5, 0.5)) {
            Err(CcdError::NonFinite { step }) => assert_eq!(step, 1),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(Bounds::scalar(1.0, 0.0).is_err());
    }
}
