//! The concrete microgrid battery-sizing instances used throughout the guide.
//!
//! The battery pack is a series RC circuit whose charge x follows
//! `x_k = theta * x_{k-1} + u_{k-1}` after forward-Euler discretization, with
//! `theta = 1 - dt/(RC)` and input `u_k = (dt/R) * V_load,k`. The controller is
//! proportional feedback toward a reference charge. Featured metrics:
//!
//! * mu1 — state tracking error with terminal cost, `x_1 + ... + x_{N-1} - x_N`
//! * mu2 — total control effort, `5 (u_1 + ... + u_{N-1})`
//! * mu3 — degradation proxy, `theta` (four-metric variant)
//! * mu4 — pack mass / manufacturing-emissions proxy, `1/theta` (four-metric variant)

use crate::problem::{
    Bounds, CCDProblemInstance, CcdError, ControlLawFn, DynamicsFn, MetricFn, Result, Trajectory,
    DEFAULT_TOLERANCE,
};
use std::sync::Arc;

/// Which metric set the instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicrogridVariant {
    TwoMetric,
    FourMetric,
}

/// Parameters for [`build_microgrid`]. Defaults reproduce the reference
/// experiment: x1 = 10, x_r = 20, N = 3, u in [0, 7], theta and phi in
/// [0.1, 0.5], metric upper bounds [8, 20] plus [0.1, 5] in the four-metric
/// variant.
#[derive(Debug, Clone)]
pub struct MicrogridParams {
    pub initial_charge: f64,
    pub reference_state: f64,
    pub horizon: usize,
    pub input_bounds: (f64, f64),
    pub theta_bounds: (f64, f64),
    pub phi_bounds: (f64, f64),
    /// Override for the per-metric bounds; `None` takes the variant defaults.
    pub metric_bounds: Option<Vec<(f64, f64)>>,
    pub variant: MicrogridVariant,
    pub tolerance: f64,
}

impl MicrogridParams {
    pub fn two_metric() -> Self {
        Self {
            initial_charge: 10.0,
            reference_state: 20.0,
            horizon: 3,
            input_bounds: (0.0, 7.0),
            theta_bounds: (0.1, 0.5),
            phi_bounds: (0.1, 0.5),
            metric_bounds: None,
            variant: MicrogridVariant::TwoMetric,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn four_metric() -> Self {
        Self {
            variant: MicrogridVariant::FourMetric,
            ..Self::two_metric()
        }
    }

    fn default_metric_bounds(&self) -> Vec<(f64, f64)> {
        match self.variant {
            MicrogridVariant::TwoMetric => vec![(0.0, 8.0), (0.0, 20.0)],
            MicrogridVariant::FourMetric => {
                vec![(0.0, 8.0), (0.0, 20.0), (0.0, 0.1), (0.0, 5.0)]
            }
        }
    }
}

/// Build the CCD problem instance for the given microgrid parameters.
pub fn build_microgrid(params: &MicrogridParams) -> Result<CCDProblemInstance> {
    if params.variant == MicrogridVariant::FourMetric && params.theta_bounds.0 <= 0.0 {
        return Err(CcdError::InvalidProblem(
            "four-metric variant requires a positive theta lower bound (mu4 = 1/theta)".into(),
        ));
    }
    let metric_bounds = params
        .metric_bounds
        .clone()
        .unwrap_or_else(|| params.default_metric_bounds());
    let expected_metrics = match params.variant {
        MicrogridVariant::TwoMetric => 2,
        MicrogridVariant::FourMetric => 4,
    };
    if metric_bounds.len() != expected_metrics {
        return Err(CcdError::InvalidProblem(format!(
            "{:?} variant has {expected_metrics} metrics but {} bound pairs were given",
            params.variant,
            metric_bounds.len()
        )));
    }

    let dynamics: DynamicsFn =
        Arc::new(|x: &[f64], u: &[f64], theta: &[f64]| vec![theta[0] * x[0] + u[0]]);

    let reference = params.reference_state;
    let control_law: ControlLawFn =
        Arc::new(move |ctx, phi: &[f64]| vec![phi[0] * (reference - ctx.state[0])]);

    let tracking: MetricFn = Arc::new(|traj: &Trajectory, _th: &[f64], _ph: &[f64]| {
        let n = traj.states.len();
        let partial: f64 = traj.states[..n - 1].iter().map(|x| x[0]).sum();
        partial - traj.states[n - 1][0]
    });
    let effort: MetricFn = Arc::new(|traj: &Trajectory, _th: &[f64], _ph: &[f64]| {
        5.0 * traj.inputs.iter().map(|u| u[0]).sum::<f64>()
    });

    let mut metric_maps = vec![tracking, effort];
    if params.variant == MicrogridVariant::FourMetric {
        let degradation: MetricFn =
            Arc::new(|_t: &Trajectory, theta: &[f64], _ph: &[f64]| theta[0]);
        let mass: MetricFn = Arc::new(|_t: &Trajectory, theta: &[f64], _ph: &[f64]| 1.0 / theta[0]);
        metric_maps.push(degradation);
        metric_maps.push(mass);
    }

    let input_bounds =
        vec![Bounds::scalar(params.input_bounds.0, params.input_bounds.1)?; params.horizon - 1];

    CCDProblemInstance::new(
        params.horizon,
        vec![params.initial_charge],
        dynamics,
        control_law,
        metric_maps,
        input_bounds,
        Bounds::scalar(params.theta_bounds.0, params.theta_bounds.1)?,
        Bounds::scalar(params.phi_bounds.0, params.phi_bounds.1)?,
        metric_bounds,
        params.tolerance,
    )
}

/// Physical battery-pack parameters behind the discretized model.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalBattery {
    pub resistance: f64,
    pub capacitance: f64,
    pub time_step: f64,
    /// Controllable load voltage per step; scaled into inputs by `dt/R`.
    pub load_voltages: Vec<f64>,
}

/// Map physical parameters to the discrete model: `theta = 1 - dt/(RC)` and
/// the scale `dt/R` converting load voltage into the input `u_k`.
pub fn theta_from_physical(battery: &PhysicalBattery) -> Result<(f64, f64)> {
    if battery.resistance <= 0.0 || battery.capacitance <= 0.0 || battery.time_step <= 0.0 {
        return Err(CcdError::Contract(format!(
            "R, C, and dt must be positive, got R={} C={} dt={}",
            battery.resistance, battery.capacitance, battery.time_step
        )));
    }
    let theta = 1.0 - battery.time_step / (battery.resistance * battery.capacitance);
    let input_scale = battery.time_step / battery.resistance;
    Ok((theta, input_scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DesignPoint;

    #[test]
    fn table_row_four() {
        let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        let (_, report) = problem
            .evaluate_design(&DesignPoint::scalar(0.4, 0.1))
            .unwrap();
        let expected = [11.5, 12.5, 0.4, 2.5];
        for (value, want) in report.values.iter().zip(expected) {
            assert!((value - want).abs() < 1e-9, "got {value}, want {want}");
        }
    }

    #[test]
    fn two_metric_matches_first_two_of_four_metric() {
        let two = build_microgrid(&MicrogridParams::two_metric()).unwrap();
        let four = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let design =
                    DesignPoint::scalar(0.1 + 0.05 * i as f64, 0.1 + 0.05 * j as f64);
                let (_, a) = two.evaluate_design(&design).unwrap();
                let (_, b) = four.evaluate_design(&design).unwrap();
                assert_eq!(a.values[0], b.values[0]);
                assert_eq!(a.values[1], b.values[1]);
            }
        }
    }

    #[test]
    fn degenerate_two_step_horizon() {
        let mut params = MicrogridParams::two_metric();
        params.horizon = 2;
        let problem = build_microgrid(&params).unwrap();
        let design = DesignPoint::scalar(0.3, 0.2);
        let (traj, report) = problem.evaluate_design(&design).unwrap();
        let u1 = traj.inputs[0][0];
        assert!((report.values[0] - (traj.states[0][0] - traj.states[1][0])).abs() < 1e-12);
        assert!((report.values[1] - 5.0 * u1).abs() < 1e-12);
    }

    #[test]
    fn degradation_times_mass_is_one() {
        let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
        for i in 0..41 {
            let theta = 0.1 + 0.01 * i as f64;
            let (_, report) = problem
                .evaluate_design(&DesignPoint::scalar(theta, 0.25))
                .unwrap();
            assert!((report.values[2] * report.values[3] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn four_metric_rejects_nonpositive_theta_lower_bound() {
        let mut params = MicrogridParams::four_metric();
        params.theta_bounds = (0.0, 0.5);
        assert!(build_microgrid(&params).is_err());
    }

    #[test]
    fn physical_mapping() {
        let (theta, scale) = theta_from_physical(&PhysicalBattery {
            resistance: 1.0,
            capacitance: 1.0,
            time_step: 0.5,
            load_voltages: vec![],
        })
        .unwrap();
        assert!((theta - 0.5).abs() < 1e-12);
        assert!((scale - 0.5).abs() < 1e-12);

        let (theta, scale) = theta_from_physical(&PhysicalBattery {
            resistance: 2.0,
            capacitance: 1.0,
            time_step: 1.8,
            load_voltages: vec![],
        })
        .unwrap();
        assert!((theta - 0.1).abs() < 1e-12);
        assert!((scale - 0.9).abs() < 1e-12);

        // dt = RC sits on the discretization boundary.
        let (theta, _) = theta_from_physical(&PhysicalBattery {
            resistance: 1.0,
            capacitance: 2.0,
            time_step: 2.0,
            load_voltages: vec![],
        })
        .unwrap();
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn physical_mapping_rejects_nonpositive_parameters() {
        assert!(theta_from_physical(&PhysicalBattery {
            resistance: -1.0,
            capacitance: 1.0,
            time_step: 0.5,
            load_voltages: vec![],
        })
        .is_err());
    }
}
