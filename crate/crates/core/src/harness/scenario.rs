//! Built-in environments.

use sha2::{Digest, Sha256};

use crate::env::{ArmSpec, Environment};
use crate::error::{Error, Result};

pub const SCENARIOS: [&str; 3] = ["bernoulli9", "gaussian9", "bs20"];

const BENCH_MEANS: [f64; 9] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
const BENCH_CAPS: [u32; 9] = [2, 4, 3, 3, 2, 1, 3, 4, 2];

/// Round-trip times (units of 100 ms) and throughputs of twenty base stations.
const BS_RTT: [f64; 20] = [
    1.2, 1.1, 4.2, 4.9, 4.5, 3.4, 5.0, 4.2, 5.1, 3.9, 4.8, 5.7, 3.7, 4.7, 3.2, 5.1, 4.4, 5.1, 4.9, 4.1,
];
const BS_THR: [f64; 20] = [
    8.2, 8.1, 1.2, 1.2, 1.4, 1.1, 1.3, 1.2, 1.1, 1.4, 1.0, 1.1, 1.2, 1.0, 1.3, 1.2, 1.0, 1.1, 1.3, 1.2,
];
const BS_PLAYS: u32 = 18;

pub fn builtin_scenario(name: &str) -> Result<Environment> {
    match name {
        "bernoulli9" => Environment::new(
            BENCH_MEANS.iter().zip(BENCH_CAPS).map(|(&mu, m)| ArmSpec::bernoulli(mu, m)).collect(),
            7,
            0,
        ),
        "gaussian9" => Environment::new(
            BENCH_MEANS.iter().zip(BENCH_CAPS).map(|(&mu, m)| ArmSpec::gaussian(mu, m, 0.5)).collect(),
            7,
            0,
        ),
        // several stations share a round-trip time
        "bs20" => Environment::with_tied_means(
            BS_RTT
                .iter()
                .zip(BS_THR)
                .map(|(&rtt, thr)| ArmSpec::bernoulli(1.0 / rtt, thr.round() as u32))
                .collect(),
            BS_PLAYS,
            0,
        ),
        _ => Err(Error::UnknownScenario {
            name: name.to_string(),
            available: SCENARIOS.join(", "),
        }),
    }
}

/// Content hash of the arm parameters and play count.
pub fn scenario_hash(env: &Environment) -> String {
    let mut h = Sha256::new();
    h.update(env.plays().to_le_bytes());
    for arm in env.arms() {
        h.update(arm.mean.to_bits().to_le_bytes());
        h.update(arm.capacity.to_le_bytes());
        match arm.distribution {
            crate::env::RewardDistribution::Bernoulli => h.update([0u8]),
            crate::env::RewardDistribution::Gaussian { variance } => {
                h.update([1u8]);
                h.update(variance.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}
