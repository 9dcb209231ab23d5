//! Replication runner and regret aggregation.
//!
//! Replication `r` draws environment noise from stream `2r` and policy
//! randomness from stream `2r + 1` of a ChaCha8 generator keyed by the base
//! seed, so every policy faces the same per-replication seeds and results do
//! not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::scenario::scenario_hash;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::policies::PolicySpec;

/// Slots at the end of the horizon over which the optimal-action frequency is
/// summarized.
pub const FINAL_WINDOW: u64 = 1000;

/// Two generators for replication `rep`: environment noise, policy noise.
pub fn replication_rngs(seed: u64, rep: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    env_rng.set_stream(2 * rep);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    policy_rng.set_stream(2 * rep + 1);
    (env_rng, policy_rng)
}

/// Logged slots: multiples of `stride`, plus `T`.
pub fn time_grid(horizon: u64, stride: u64) -> Vec<u64> {
    let stride = stride.max(1);
    let mut grid: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if horizon > 0 && grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

/// Outcome of one replication of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    /// Cumulative pseudo-regret at each logged slot.
    pub regret: Vec<f64>,
    /// Whether the action at each logged slot was optimal.
    pub optimal: Vec<bool>,
    /// Optimal plays within the final window.
    pub final_optimal: u64,
}

/// Runs one policy for `horizon` slots.
pub fn run_replication(
    env: &Environment,
    spec: &PolicySpec,
    horizon: u64,
    grid: &[u64],
    seed: u64,
    rep: u64,
) -> Result<Replication> {
    let (mut env_rng, policy_rng) = replication_rngs(seed, rep);
    let mut policy = spec.build(env, horizon, policy_rng)?;
    let best = env.optimal_reward();
    let tolerance = 1e-12 * f64::from(env.plays());
    let window_start = horizon.saturating_sub(FINAL_WINDOW) + 1;

    let mut out = Replication {
        regret: Vec::with_capacity(grid.len()),
        optimal: Vec::with_capacity(grid.len()),
        final_optimal: 0,
    };
    let mut cumulative = 0.0;
    let mut next = grid.iter().peekable();
    for t in 1..=horizon {
        let action = policy.select_action(t);
        let feedback = env
            .sample_feedback(&action, &mut env_rng)
            .map_err(|e| Error::InvalidAction(format!("{} at slot {t}: {e}", spec.label())))?;
        let gap = (best - env.expected_reward_unchecked(&action)).max(0.0);
        let hit = gap <= tolerance;
        cumulative += if hit { 0.0 } else { gap };
        if hit && t >= window_start {
            out.final_optimal += 1;
        }
        if next.peek() == Some(&&t) {
            next.next();
            out.regret.push(cumulative);
            out.optimal.push(hit);
        }
        policy.observe(t, &action, &feedback);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub label: String,
    pub spec: PolicySpec,
    pub t: Vec<u64>,
    pub mean_regret: Vec<f64>,
    /// Sample standard deviation across replications.
    pub std_regret: Vec<f64>,
    /// Fraction of replications playing an optimal action at each logged slot.
    pub optimal_action_freq: Vec<f64>,
    /// Fraction of optimal plays over the final window, averaged over
    /// replications.
    pub final_optimal_freq: f64,
}

impl PolicyTrace {
    pub fn final_mean_regret(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_std_regret(&self) -> f64 {
        self.std_regret.last().copied().unwrap_or(0.0)
    }

    /// Mean regret at the last logged slot not after `t`.
    pub fn regret_at(&self, t: u64) -> Option<f64> {
        let i = self.t.partition_point(|&s| s <= t);
        i.checked_sub(1).map(|i| self.mean_regret[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFailure {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub scenario: Option<String>,
    pub scenario_hash: String,
    pub horizon: u64,
    pub reps: usize,
    pub stride: u64,
    pub version: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub metadata: RunMetadata,
    pub traces: Vec<PolicyTrace>,
    pub failures: Vec<PolicyFailure>,
}

impl ExperimentResult {
    pub fn trace(&self, label: &str) -> Option<&PolicyTrace> {
        self.traces.iter().find(|t| t.label == label)
    }
}

pub fn version_string() -> String {
    format!("mpmab-sa {}", env!("CARGO_PKG_VERSION"))
}

fn aggregate(spec: &PolicySpec, grid: &[u64], reps: &[Replication], horizon: u64) -> PolicyTrace {
    let n = reps.len() as f64;
    let mut mean = vec![0.0; grid.len()];
    let mut std = vec![0.0; grid.len()];
    let mut freq = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let m = reps.iter().map(|r| r.regret[i]).sum::<f64>() / n;
        let var = if reps.len() > 1 {
            reps.iter().map(|r| (r.regret[i] - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean[i] = m;
        std[i] = var.sqrt();
        freq[i] = reps.iter().filter(|r| r.optimal[i]).count() as f64 / n;
    }
    let window = horizon.clamp(1, FINAL_WINDOW) as f64;
    let final_optimal_freq = if horizon == 0 {
        0.0
    } else {
        reps.iter().map(|r| r.final_optimal as f64 / window).sum::<f64>() / n
    };
    PolicyTrace {
        label: spec.label(),
        spec: spec.clone(),
        t: grid.to_vec(),
        mean_regret: mean,
        std_regret: std,
        optimal_action_freq: freq,
        final_optimal_freq,
    }
}

fn run_policy(env: &Environment, spec: &PolicySpec, cfg: &ExperimentConfig, grid: &[u64]) -> Result<PolicyTrace> {
    spec.check(env)?;
    let reps: Vec<Replication> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| run_replication(env, spec, cfg.horizon, grid, cfg.seed, r))
        .collect::<Result<_>>()?;
    Ok(aggregate(spec, grid, &reps, cfg.horizon))
}

/// Runs every policy of the config. A policy that cannot run on the
/// environment is reported in `failures`; the others proceed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = cfg.environment()?;
    let grid = time_grid(cfg.horizon, cfg.stride());
    let body = || {
        let mut traces = Vec::new();
        let mut failures = Vec::new();
        for spec in &cfg.policies {
            match run_policy(&env, spec, cfg, &grid) {
                Ok(t) => traces.push(t),
                Err(e) => failures.push(PolicyFailure {
                    label: spec.label(),
                    error: e.to_string(),
                }),
            }
        }
        (traces, failures)
    };
    let (traces, failures) = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("threads: {e}")))?
            .install(body),
        None => body(),
    };
    Ok(ExperimentResult {
        metadata: RunMetadata {
            seed: cfg.seed,
            scenario: cfg.scenario.clone(),
            scenario_hash: scenario_hash(&env),
            horizon: cfg.horizon,
            reps: cfg.reps,
            stride: cfg.stride(),
            version: version_string(),
            config: cfg.clone(),
        },
        traces,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;

    #[test]
    fn grid_always_ends_at_horizon() {
        assert_eq!(time_grid(10, 3), vec![3, 6, 9, 10]);
        assert_eq!(time_grid(9, 3), vec![3, 6, 9]);
        assert!(time_grid(0, 5).is_empty());
        assert_eq!(time_grid(3, 1), vec![1, 2, 3]);
    }

    #[test]
    fn streams_differ_per_replication() {
        use rand::RngCore;
        let (mut a, mut b) = replication_rngs(1, 0);
        let (mut c, _) = replication_rngs(1, 1);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
        assert_eq!(x, replication_rngs(1, 0).0.next_u64());
    }

    #[test]
    fn empty_horizon_gives_empty_traces() {
        let cfg = ExperimentConfig::for_scenario("bernoulli9", 0, 2, 0, vec![PolicySpec::new(PolicyKind::Orchexplore)]);
        let res = run_experiment(&cfg).unwrap();
        assert!(res.traces[0].t.is_empty());
        assert!(res.traces[0].mean_regret.is_empty());
        assert_eq!(res.metadata.horizon, 0);
    }

    #[test]
    fn optimal_replay_has_zero_regret() {
        let cfg = ExperimentConfig::for_scenario("bs20", 500, 1, 3, vec![PolicySpec::new(PolicyKind::Optimal)]);
        let res = run_experiment(&cfg).unwrap();
        let tr = &res.traces[0];
        assert!(tr.mean_regret.iter().all(|&r| r == 0.0));
        assert!(tr.optimal_action_freq.iter().all(|&f| f == 1.0));
        assert_eq!(tr.final_optimal_freq, 1.0);
    }

    #[test]
    fn oversized_flat_baseline_is_a_failure_entry() {
        let cfg = ExperimentConfig::for_scenario(
            "bs20",
            50,
            1,
            0,
            vec![PolicySpec::new(PolicyKind::UcbFlat), PolicySpec::new(PolicyKind::Optimal)],
        );
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.traces.len(), 1);
        assert_eq!(res.failures.len(), 1);
        assert!(res.failures[0].error.contains("17672631900"));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let policies = vec![PolicySpec::new(PolicyKind::Orchexplore), PolicySpec::new(PolicyKind::TsKc)];
        let mut cfg = ExperimentConfig::for_scenario("bernoulli9", 400, 4, 9, policies);
        cfg.threads = Some(1);
        let a = run_experiment(&cfg).unwrap();
        cfg.threads = Some(3);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.traces, b.traces);
    }
}
