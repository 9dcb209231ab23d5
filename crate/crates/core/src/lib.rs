//! Multiple-play stochastic bandits with shareable arms of finite reward
//! capacity: environment model, capacity estimation, learning policies and an
//! experiment harness.

pub mod capest;
pub mod env;
pub mod error;
pub mod harness;
pub mod policies;

pub use env::{Action, ArmSpec, Environment, Feedback, RewardDistribution, RewardModel};
pub use error::{Error, Result};
pub use policies::{Policy, PolicyKind, PolicySpec};
