//! Graded-precision localization on fixed-grid wireless sensor networks.
//!
//! The crate is split along the lines of a deployment workflow:
//!
//! - [`geometry`] and [`planner`] hold the closed-form deployment math (grid
//!   layout, range bounds, timing, the two-region error model) together with
//!   brute-force geometric oracles that check it.
//! - [`radio`], [`mobility`] and [`localization`] model the moving node: beacon
//!   reception, the pedestrian walk with its error-prone step sensing, and the
//!   coarse / fine / extra-fine localization state machine.
//! - [`engine`] binds those into a deterministic discrete-event run producing a
//!   [`engine::Trace`], and [`metrics`] reduces traces to CLE / MAE / RMSE and
//!   error-index distributions.
//! - [`scenario`] and [`report`] define the on-disk scenario file and the CSV /
//!   JSON outputs consumed by the command-line front end.

pub mod engine;
pub mod error;
pub mod geometry;
pub mod localization;
pub mod metrics;
pub mod mobility;
pub mod planner;
pub mod radio;
pub mod report;
pub mod scenario;
pub mod seed;
pub mod time;

pub use error::{Error, Result};
pub use geometry::{Displacement, GridConfig, NodeId, Point2D};
pub use time::SimTime;
