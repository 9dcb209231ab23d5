use thiserror::Error;

/// Errors raised by the environment model, the statistics core, policies and
/// the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arm {index}: {reason}")]
    InvalidArm { index: usize, reason: String },

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("infeasible environment: total capacity {total} is below {plays} plays")]
    Infeasible { total: u64, plays: u32 },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("action space has {cardinality} allocations, above the cap of {cap}")]
    ActionSpaceTooLarge { cardinality: u128, cap: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown scenario `{name}` (available: {available})")]
    UnknownScenario { name: String, available: String },

    #[error("unknown policy `{name}` (registered: {registered})")]
    UnknownPolicy { name: String, registered: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
