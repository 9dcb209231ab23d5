//! Known-capacity index baselines: each slot computes one index per arm and
//! plays `oracle(index, m, N)` with the true capacities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};

use super::{oracle, Policy, ProblemInfo};
use crate::capest::{klucb_index, ArmStatistics};
use crate::env::{Action, Feedback, RewardModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRule {
    KlUcb,
    Thompson,
}

/// Gaussian Thompson prior: `N(0.5, 1)`.
pub const GAUSSIAN_PRIOR_MEAN: f64 = 0.5;
pub const GAUSSIAN_PRIOR_VARIANCE: f64 = 1.0;

pub struct KnownCapacityIndex {
    info: ProblemInfo,
    capacities: Vec<u32>,
    stats: Vec<ArmStatistics>,
    rule: IndexRule,
    rng: ChaCha8Rng,
    label: String,
}

impl KnownCapacityIndex {
    pub fn new(
        info: ProblemInfo,
        capacities: Vec<u32>,
        rule: IndexRule,
        rng: ChaCha8Rng,
        label: impl Into<String>,
    ) -> Result<Self> {
        if capacities.len() != info.arms {
            return Err(Error::InvalidEnvironment(format!(
                "{} capacities for {} arms",
                capacities.len(),
                info.arms
            )));
        }
        Ok(Self {
            stats: capacities.iter().map(|&m| ArmStatistics::with_known_capacity(m)).collect(),
            info,
            capacities,
            rule,
            rng,
            label: label.into(),
        })
    }

    pub fn stats(&self) -> &[ArmStatistics] {
        &self.stats
    }

    fn klucb(&self, t: u64) -> Vec<f64> {
        self.stats
            .iter()
            .map(|s| {
                if s.ie_count == 0 {
                    f64::INFINITY
                } else {
                    klucb_index(s.mu_hat, s.ie_count, t as f64, self.info.model).unwrap_or(f64::INFINITY)
                }
            })
            .collect()
    }

    fn thompson(&mut self) -> Vec<f64> {
        let model = self.info.model;
        let rng = &mut self.rng;
        self.stats
            .iter()
            .map(|s| posterior_sample(s, model, rng))
            .collect()
    }
}

/// One draw from the arm's posterior: `Beta(1 + successes, 1 + failures)` for
/// Bernoulli rewards, a conjugate Normal with known variance otherwise.
pub(crate) fn posterior_sample<R: Rng + ?Sized>(s: &ArmStatistics, model: RewardModel, rng: &mut R) -> f64 {
    let n = s.ie_count as f64;
    match model {
        RewardModel::Bernoulli => {
            let successes = (s.mu_hat * n).clamp(0.0, n);
            Beta::new(1.0 + successes, 1.0 + n - successes)
                .expect("positive shape parameters")
                .sample(rng)
        }
        RewardModel::Gaussian { variance } => {
            let precision = 1.0 / GAUSSIAN_PRIOR_VARIANCE + n / variance;
            let mean = (GAUSSIAN_PRIOR_MEAN / GAUSSIAN_PRIOR_VARIANCE + s.mu_hat * n / variance) / precision;
            Normal::new(mean, precision.recip().sqrt())
                .expect("finite posterior")
                .sample(rng)
        }
    }
}

impl Policy for KnownCapacityIndex {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, t: u64) -> Action {
        let index = match self.rule {
            IndexRule::KlUcb => self.klucb(t),
            IndexRule::Thompson => self.thompson(),
        };
        oracle(&index, &self.capacities, self.info.plays).expect("true capacities cover the plays")
    }

    fn observe(&mut self, _t: u64, _action: &Action, feedback: &Feedback) {
        for e in &feedback.entries {
            let load = e.plays.min(self.capacities[e.arm]);
            self.stats[e.arm].record_ie(e.reward / f64::from(load));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmSpec, Environment};
    use rand::SeedableRng;

    fn benchmark() -> Environment {
        let means = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
        let caps = [2, 4, 3, 3, 2, 1, 3, 4, 2];
        let arms = means.iter().zip(caps).map(|(&mu, m)| ArmSpec::bernoulli(mu, m)).collect();
        Environment::new(arms, 7, 0).unwrap()
    }

    #[test]
    fn first_slot_ties_break_by_index() {
        let env = benchmark();
        let mut p = KnownCapacityIndex::new(
            ProblemInfo::from_env(&env, 100),
            env.capacities(),
            IndexRule::KlUcb,
            ChaCha8Rng::seed_from_u64(0),
            "kl",
        )
        .unwrap();
        assert_eq!(p.select_action(1).0, vec![2, 4, 1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn true_means_give_optimal_action() {
        let env = benchmark();
        let a = oracle(&env.means(), &env.capacities(), 7).unwrap();
        assert_eq!(a, env.optimal_action().0);
    }

    #[test]
    fn uniform_prior_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = ArmStatistics::with_known_capacity(1);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| posterior_sample(&s, RewardModel::Bernoulli, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let below_quarter = draws.iter().filter(|&&x| x < 0.25).count() as f64 / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert!((below_quarter - 0.25).abs() < 0.015);
        assert!(draws.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn samples_use_known_capacity() {
        let env = benchmark();
        let mut p = KnownCapacityIndex::new(
            ProblemInfo::from_env(&env, 100),
            env.capacities(),
            IndexRule::Thompson,
            ChaCha8Rng::seed_from_u64(0),
            "ts",
        )
        .unwrap();
        let fb = Feedback {
            entries: vec![crate::env::ArmFeedback {
                arm: 0,
                plays: 5,
                reward: 2.0,
            }],
        };
        p.observe(1, &Action(vec![5, 2, 0, 0, 0, 0, 0, 0, 0]), &fb);
        assert_eq!(p.stats()[0].mu_hat, 1.0);
    }
}
