//! Ground-truth environment: arms with a per-load reward distribution and an
//! integer reward capacity, the N-play action space, load-dependent reward
//! sampling and pseudo-regret accounting.
//!
//! An arm `k` pulled by `a` plays returns `min(a, m_k) * X_k` where `X_k` is a
//! single per-load draw for that slot. The learner only sees rewards of arms
//! that received at least one play.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-load reward distribution of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RewardDistribution {
    Bernoulli,
    Gaussian { variance: f64 },
}

/// Largest Gaussian per-load variance the statistics core is calibrated for.
pub const MAX_GAUSSIAN_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    /// Per-load reward mean.
    pub mean: f64,
    /// Reward capacity: plays beyond this add nothing.
    pub capacity: u32,
    pub distribution: RewardDistribution,
}

impl ArmSpec {
    pub fn bernoulli(mean: f64, capacity: u32) -> Self {
        Self {
            mean,
            capacity,
            distribution: RewardDistribution::Bernoulli,
        }
    }

    pub fn gaussian(mean: f64, capacity: u32, variance: f64) -> Self {
        Self {
            mean,
            capacity,
            distribution: RewardDistribution::Gaussian { variance },
        }
    }

    /// Checks the arm on its own (capacity against `plays` is checked by the
    /// environment).
    pub fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidArm { index, reason });
        if !(self.mean > 0.0 && self.mean <= 1.0) {
            return bad(format!("mean {} outside (0, 1]", self.mean));
        }
        if self.capacity == 0 {
            return bad("capacity must be at least 1".into());
        }
        if let RewardDistribution::Gaussian { variance } = self.distribution {
            if !(variance > 0.0 && variance <= MAX_GAUSSIAN_VARIANCE) {
                return bad(format!("gaussian variance {variance} outside (0, 1/2]"));
            }
        }
        Ok(())
    }

    /// Draws one per-load sample `X_k`.
    pub fn sample_per_load<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.distribution {
            RewardDistribution::Bernoulli => {
                if rng.gen::<f64>() < self.mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardDistribution::Gaussian { variance } => Normal::new(self.mean, variance.sqrt())
                .expect("variance validated at construction")
                .sample(rng),
        }
    }
}

/// Reward family the learner assumes when building confidence indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardModel {
    Bernoulli,
    Gaussian { variance: f64 },
}

/// An N-play allocation over K arms; entry `k` is the number of plays on arm `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(pub Vec<u32>);

impl Action {
    pub fn zeros(arms: usize) -> Self {
        Action(vec![0; arms])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&a| u64::from(a)).sum()
    }

    /// Checks membership in the action space: K entries summing to N.
    pub fn validate(&self, arms: usize, plays: u32) -> Result<()> {
        if self.0.len() != arms {
            return Err(Error::InvalidAction(format!(
                "expected {arms} entries, got {}",
                self.0.len()
            )));
        }
        if self.total() != u64::from(plays) {
            return Err(Error::InvalidAction(format!(
                "plays sum to {}, expected {plays}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl From<Vec<u32>> for Action {
    fn from(v: Vec<u32>) -> Self {
        Action(v)
    }
}

/// Reward observed on one arm that received at least one play.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmFeedback {
    pub arm: usize,
    pub plays: u32,
    pub reward: f64,
}

/// Semi-bandit feedback of one time slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Feedback {
    pub entries: Vec<ArmFeedback>,
}

impl Feedback {
    pub fn reward_of(&self, arm: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.arm == arm).map(|e| e.reward)
    }

    pub fn total_reward(&self) -> f64 {
        self.entries.iter().map(|e| e.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    arms: Vec<ArmSpec>,
    plays: u32,
    rng_seed: u64,
}

impl Environment {
    /// Builds an environment, rejecting tied means.
    pub fn new(arms: Vec<ArmSpec>, plays: u32, rng_seed: u64) -> Result<Self> {
        Self::build(arms, plays, rng_seed, false)
    }

    /// Builds an environment that may contain arms with equal means. Orderings
    /// then break ties by the lower arm index.
    pub fn with_tied_means(arms: Vec<ArmSpec>, plays: u32, rng_seed: u64) -> Result<Self> {
        Self::build(arms, plays, rng_seed, true)
    }

    fn build(arms: Vec<ArmSpec>, plays: u32, rng_seed: u64, allow_ties: bool) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidEnvironment("no arms".into()));
        }
        if plays == 0 {
            return Err(Error::InvalidEnvironment("plays must be at least 1".into()));
        }
        for (i, arm) in arms.iter().enumerate() {
            arm.validate(i)?;
            if arm.capacity > plays {
                return Err(Error::InvalidArm {
                    index: i,
                    reason: format!("capacity {} exceeds {plays} plays", arm.capacity),
                });
            }
        }
        if !allow_ties {
            for i in 0..arms.len() {
                for j in (i + 1)..arms.len() {
                    if arms[i].mean == arms[j].mean {
                        return Err(Error::InvalidEnvironment(format!(
                            "arms {i} and {j} share mean {}",
                            arms[i].mean
                        )));
                    }
                }
            }
        }
        let total: u64 = arms.iter().map(|a| u64::from(a.capacity)).sum();
        if total < u64::from(plays) {
            return Err(Error::Infeasible { total, plays });
        }
        Ok(Self {
            arms,
            plays,
            rng_seed,
        })
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn plays(&self) -> u32 {
        self.plays
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean).collect()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.arms.iter().map(|a| a.capacity).collect()
    }

    /// Reward family a learner should assume: Bernoulli when every arm is
    /// Bernoulli, otherwise Gaussian with the largest variance present
    /// (Bernoulli arms count as variance 1/4).
    pub fn reward_model(&self) -> RewardModel {
        let mut all_bernoulli = true;
        let mut variance: f64 = 0.0;
        for arm in &self.arms {
            match arm.distribution {
                RewardDistribution::Bernoulli => variance = variance.max(0.25),
                RewardDistribution::Gaussian { variance: v } => {
                    all_bernoulli = false;
                    variance = variance.max(v);
                }
            }
        }
        if all_bernoulli {
            RewardModel::Bernoulli
        } else {
            RewardModel::Gaussian { variance }
        }
    }

    /// Draws the feedback of one slot. Each selected arm gets one fresh
    /// per-load draw shared by all of its utilized capacity.
    pub fn sample_feedback<R: Rng + ?Sized>(&self, action: &Action, rng: &mut R) -> Result<Feedback> {
        action.validate(self.num_arms(), self.plays)?;
        let entries = action
            .0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(k, &a)| {
                let arm = &self.arms[k];
                let x = arm.sample_per_load(rng);
                ArmFeedback {
                    arm: k,
                    plays: a,
                    reward: f64::from(a.min(arm.capacity)) * x,
                }
            })
            .collect();
        Ok(Feedback { entries })
    }

    /// `f(a) = sum_k min(a_k, m_k) * mu_k`.
    pub fn expected_reward(&self, action: &Action) -> Result<f64> {
        action.validate(self.num_arms(), self.plays)?;
        Ok(self.expected_reward_unchecked(action))
    }

    pub(crate) fn expected_reward_unchecked(&self, action: &Action) -> f64 {
        action
            .0
            .iter()
            .zip(&self.arms)
            .map(|(&a, arm)| f64::from(a.min(arm.capacity)) * arm.mean)
            .sum()
    }

    /// The optimal action and `L`, the number of arms it pulls.
    pub fn optimal_action(&self) -> (Action, usize) {
        let action = greedy_allocation(&self.means(), &self.capacities(), self.plays)
            .expect("feasibility checked at construction");
        let used = action.0.iter().filter(|&&a| a > 0).count();
        (action, used)
    }

    pub fn optimal_reward(&self) -> f64 {
        self.expected_reward_unchecked(&self.optimal_action().0)
    }

    /// Pseudo-regret `f(a*) - f(a)` of one slot.
    pub fn instantaneous_regret(&self, action: &Action) -> Result<f64> {
        Ok((self.optimal_reward() - self.expected_reward(action)?).max(0.0))
    }
}

/// Arm indices sorted by descending score; equal scores keep index order.
pub fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Fills arms in descending score order, each up to its capacity, until the
/// plays are exhausted.
pub fn greedy_allocation(scores: &[f64], capacities: &[u32], plays: u32) -> Result<Action> {
    if scores.len() != capacities.len() {
        return Err(Error::InvalidEnvironment(format!(
            "{} scores for {} capacities",
            scores.len(),
            capacities.len()
        )));
    }
    let total: u64 = capacities.iter().map(|&m| u64::from(m)).sum();
    if total < u64::from(plays) {
        return Err(Error::Infeasible { total, plays });
    }
    let mut action = Action::zeros(scores.len());
    let mut remaining = plays;
    for k in descending_order(scores) {
        if remaining == 0 {
            break;
        }
        let give = capacities[k].min(remaining);
        action.0[k] = give;
        remaining -= give;
    }
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn benchmark() -> Environment {
        let means = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
        let caps = [2, 4, 3, 3, 2, 1, 3, 4, 2];
        let arms = means
            .iter()
            .zip(caps)
            .map(|(&mu, m)| ArmSpec::bernoulli(mu, m))
            .collect();
        Environment::new(arms, 7, 0).unwrap()
    }

    #[test]
    fn degenerate_bernoulli_saturates_at_capacity() {
        let env = Environment::new(
            vec![ArmSpec::bernoulli(1.0, 3), ArmSpec::bernoulli(0.5, 2)],
            5,
            0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fb = env.sample_feedback(&Action(vec![5, 0]), &mut rng).unwrap();
        assert_eq!(fb.entries.len(), 1);
        assert_eq!(fb.reward_of(0), Some(3.0));
    }

    #[test]
    fn zero_draw_gives_zero_reward() {
        // mean close to zero so the first draw is a miss for this seed
        let env = Environment::new(
            vec![ArmSpec::bernoulli(1e-12, 2), ArmSpec::bernoulli(0.5, 1)],
            2,
            0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fb = env.sample_feedback(&Action(vec![2, 0]), &mut rng).unwrap();
        assert_eq!(fb.reward_of(0), Some(0.0));
    }

    #[test]
    fn gaussian_full_load_mean() {
        let env = Environment::new(
            vec![ArmSpec::gaussian(0.5, 2, 0.5), ArmSpec::gaussian(0.4, 1, 0.5)],
            2,
            0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let action = Action(vec![2, 0]);
        let n = 1_000_000;
        let sum: f64 = (0..n)
            .map(|_| env.sample_feedback(&action, &mut rng).unwrap().entries[0].reward)
            .sum();
        assert!((sum / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn invalid_actions_rejected() {
        let env = benchmark();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(env.sample_feedback(&Action(vec![1; 9]), &mut rng).is_err());
        assert!(env.expected_reward(&Action(vec![7, 0])).is_err());
    }

    #[test]
    fn expected_reward_examples() {
        let env = benchmark();
        let a = Action(vec![2, 4, 1, 0, 0, 0, 0, 0, 0]);
        assert!((env.expected_reward(&a).unwrap() - 5.7).abs() < 1e-12);

        let small = Environment::new(
            vec![ArmSpec::bernoulli(0.5, 1), ArmSpec::bernoulli(0.2, 2)],
            2,
            0,
        )
        .unwrap();
        assert_eq!(small.expected_reward(&Action(vec![2, 0])).unwrap(), 0.5);
        assert_eq!(small.expected_reward(&Action(vec![0, 2])).unwrap(), 0.4);
    }

    #[test]
    fn optimal_action_examples() {
        let env = benchmark();
        let (a, l) = env.optimal_action();
        assert_eq!(a.0, vec![2, 4, 1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(l, 3);

        let unit: Vec<_> = (0..5).map(|i| ArmSpec::bernoulli(0.1 + 0.1 * i as f64, 1)).collect();
        let env = Environment::new(unit, 3, 0).unwrap();
        let (a, l) = env.optimal_action();
        assert_eq!(a.0, vec![0, 0, 1, 1, 1]);
        assert_eq!(l, 3);

        let env = Environment::new(
            vec![ArmSpec::bernoulli(0.2, 1), ArmSpec::bernoulli(0.6, 4), ArmSpec::bernoulli(0.3, 1)],
            2,
            0,
        )
        .unwrap_err();
        assert!(matches!(env, Error::InvalidArm { .. }));
    }

    #[test]
    fn single_arm_covers_all_plays() {
        let env = Environment::new(
            vec![ArmSpec::bernoulli(0.2, 1), ArmSpec::bernoulli(0.6, 3), ArmSpec::bernoulli(0.3, 1)],
            3,
            0,
        )
        .unwrap();
        let (a, l) = env.optimal_action();
        assert_eq!(a.0, vec![0, 3, 0]);
        assert_eq!(l, 1);
    }

    #[test]
    fn regret_examples() {
        let env = benchmark();
        let (best, _) = env.optimal_action();
        assert_eq!(env.instantaneous_regret(&best).unwrap(), 0.0);
        let r = env.instantaneous_regret(&Action(vec![7, 0, 0, 0, 0, 0, 0, 0, 0])).unwrap();
        assert!((r - 3.9).abs() < 1e-12);
        let r = env.instantaneous_regret(&Action(vec![2, 5, 0, 0, 0, 0, 0, 0, 0])).unwrap();
        assert!((r - 0.7).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        let dup = vec![ArmSpec::bernoulli(0.5, 1), ArmSpec::bernoulli(0.5, 1), ArmSpec::bernoulli(0.4, 1)];
        assert!(matches!(
            Environment::new(dup.clone(), 2, 0),
            Err(Error::InvalidEnvironment(_))
        ));
        assert!(Environment::with_tied_means(dup, 2, 0).is_ok());
        let short = vec![ArmSpec::bernoulli(0.5, 1), ArmSpec::bernoulli(0.4, 1)];
        assert!(matches!(Environment::new(short, 3, 0), Err(Error::Infeasible { .. })));
        let loud = vec![ArmSpec::gaussian(0.5, 1, 0.9), ArmSpec::bernoulli(0.4, 1)];
        assert!(matches!(Environment::new(loud, 1, 0), Err(Error::InvalidArm { .. })));
        assert!(Environment::new(vec![ArmSpec::bernoulli(0.0, 1)], 1, 0).is_err());
    }
}
