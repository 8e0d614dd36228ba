//! Feasibility restoration for control co-design (CCD) constraint-satisfaction
//! problems.
//!
//! A CCD problem couples plant design variables, a feedback controller, and a
//! set of bounded featured metrics. When the metric bounds conflict, no design
//! satisfies them all. This crate restores solvability by relaxing the fewest
//! metric bounds it can: each bound gets a slack variable penalized
//! quadratically and a binary selection switch, metrics are ranked by how often
//! they violate their bounds over a small candidate population, and an outer
//! loop relaxes bounds in ranked order until a solution exists.
//!
//! ```
//! use ccd::microgrid::{build_microgrid, MicrogridParams};
//! use ccd::framework::{run_framework, FrameworkConfig, FrameworkStatus};
//!
//! let problem = build_microgrid(&MicrogridParams::four_metric()).unwrap();
//! let result = run_framework(&problem, &FrameworkConfig::default()).unwrap();
//! assert_eq!(result.status, FrameworkStatus::Solved);
//! // Only the tracking-error and degradation bounds need relaxing.
//! assert_eq!(result.relaxed_metric_indices, vec![0, 2]);
//! ```
//!
//! The long-form guide lives in the `book/` directory of the repository and is
//! mirrored into [`guide`], so its code samples run as doc-tests.

pub mod baseline;
pub mod config;
pub mod framework;
pub mod guide;
pub mod microgrid;
pub mod problem;
pub mod ranking;
pub mod relaxation;
pub mod report;
pub mod solver;

pub use problem::{
    Bounds, CCDProblemInstance, CcdError, DesignPoint, MetricReport, Result, Trajectory,
};
pub use relaxation::SelectionVector;
