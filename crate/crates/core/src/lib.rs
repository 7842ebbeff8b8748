//! Link-level analysis of delay-correlated, staticized channels for
//! high-speed-train downlinks.
//!
//! A linear receive array moving along its own axis sees, at antenna `p` and
//! time `t + (q - p) D / v`, almost the channel antenna `q` saw at time `t`.
//! Activating one antenna per symbol slot turns the fast-fading channel into a
//! slowly varying virtual one. This crate models that channel, estimates it
//! with pilot-aided two-step MMSE, and evaluates estimation error, BER and
//! spectral efficiency as functions of the pilot percentage, both in closed
//! form and by Monte Carlo simulation.

pub mod asymptotic;
pub mod channel;
pub mod correlation;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod metrics;
pub mod montecarlo;
pub mod numerics;
pub mod tradeoff;

pub use error::{Error, Result};
pub use exec::Execution;

pub use channel::{make_layout, LinkBudget, PilotLayout};
pub use correlation::ScenarioParams;
pub use metrics::{AnalysisSettings, LogBase, MetricPoint};
