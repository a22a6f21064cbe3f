//! Mixed-criticality superposition coding (MC-SC) for an RIS-assisted THz
//! downlink.
//!
//! The crate is organised bottom-up:
//!
//! * [`link`]: link gains, array responses, SINRs, rates and blockage sampling.
//! * [`kernel`]: a small dense log-barrier interior-point solver for convex
//!   max-min problems.
//! * [`power`]: the stability-driven power allocation (quadratic transform +
//!   successive convex approximation), a brute-force grid oracle and the
//!   maximum feasible arrival rate.
//! * [`queue`]: discrete-time HC/LC queue simulation and Little's-law delays.
//! * [`oma`]: the orthogonal time-sharing baseline.
//! * [`experiment`]: configuration files, parameter sweeps and CSV output.

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod link;
pub mod oma;
pub mod power;
pub mod queue;

pub use error::{Error, Result};
pub use link::{BlockageState, LinkGains, PowerAllocation, Scenario, ScenarioParams};
