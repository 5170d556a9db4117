//! Containment of networked SIS epidemic processes by event-triggered control.
//!
//! The crate provides, in dependency order:
//!
//! * [`model`] — the directed contact network, admissible control/triggering
//!   gains, containment objectives, and the controlled SIS vector field;
//! * [`sim`] — a fixed-step RK4 closed-loop simulator with per-node trigger
//!   detection and Zeno-free event logging;
//! * [`verify`] — ellipsoid certificates bounding the asymptotic Lyapunov
//!   level of the closed loop, checked against per-group thresholds;
//! * [`synth`] — two-stage emulation-based gain design via geometric
//!   programming, plus the Lyapunov-parameter linear program;
//! * [`io`] — file schemas (CSV network tables, JSON objectives/gains),
//!   synthetic network generation, SVG plots, and mode comparison.
//!
//! Rates are per abstract time unit throughout; the model fixes no wall-clock
//! interpretation of `t`.

pub mod io;
pub mod model;
pub mod sim;
pub mod synth;
pub mod verify;

pub use model::{GainSet, Network, Objective};
pub use sim::{Mode, Trajectory};
pub use verify::{Certificate, CheckKind};
