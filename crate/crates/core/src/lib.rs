//! Scheduling of secondary users on shared spectrum under primary-user
//! interference limits.
//!
//! The crate covers the rate model ([`channel`]), a mobile cell simulator
//! ([`env`]), exact per-period schedulers ([`exact`]), the FAIRSCH heuristic
//! ([`heuristic`]), fairness bookkeeping ([`fairness`]), statistics
//! ([`metrics`]) and the experiment runner ([`harness`]).

pub mod channel;
pub mod config;
pub mod env;
pub mod exact;
pub mod fairness;
pub mod harness;
pub mod heuristic;
pub mod metrics;
pub mod params;
pub mod schedule;

pub use channel::{compute_rate_matrix, RateMatrix};
pub use exact::{solve, ObjectiveKind, SolveError, SolveOptions, SolveResult};
pub use fairness::FairnessState;
pub use heuristic::{fairsch, HeuristicMode};
pub use params::SimParams;
pub use schedule::Schedule;
