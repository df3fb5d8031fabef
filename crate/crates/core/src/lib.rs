//! Stochastic gradient descent ascent (SGDA) and alternating GDA for minimax
//! learning problems, with tooling to measure algorithmic stability on
//! neighboring datasets, estimate primal-dual risks, and evaluate the
//! closed-form stability and generalization bounds those measurements are
//! compared against.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod optimizers;
pub mod parallel;
pub mod problems;
pub mod risk;
pub mod stability;
pub mod vecmath;

pub use bounds::{BoundName, BoundQuery};
pub use error::{Error, Result};
pub use optimizers::{run, Algorithm, RunConfig, Schedule, ScheduleKind, Trajectory};
pub use problems::{Dataset, Example, MinimaxProblem, ProblemKind, ProblemSpec};
pub use vecmath::Point;
