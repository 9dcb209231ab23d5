//! Decision-making algorithms behind a single select/observe contract.
//!
//! The harness owns the clock: at every slot `t` (1-based) it asks the policy
//! for an action, samples feedback from the environment and hands it back.
//! Procedures that span several slots (exploration rounds of the elimination
//! family) are queued inside the policy and emitted one action per slot.

mod bounds;
mod etc_ucb;
mod flat;
mod known_capacity;
mod mpsesa;
mod orchexplore;

pub use bounds::{bound_coefficients, theoretical_curves, upper_weight, BoundCoefficients, BoundCurves};
pub use etc_ucb::{EtcPhase, EtcUcb};
pub use flat::{action_space_size, enumerate_actions, FlatBandit, FlatRule};
pub use known_capacity::{IndexRule, KnownCapacityIndex};
pub use mpsesa::{EliminationVariant, MpSeSa};
pub use orchexplore::OrchExplore;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capest::WidthFn;
use crate::env::{descending_order, greedy_allocation, Action, Environment, Feedback, RewardModel};
use crate::error::{Error, Result};

/// Select/observe contract driven by the harness loop.
pub trait Policy: Send {
    fn label(&self) -> &str;

    /// The allocation to play at slot `t`. Always a member of the action space.
    fn select_action(&mut self, t: u64) -> Action;

    /// Feedback for the action returned by the preceding `select_action`.
    fn observe(&mut self, t: u64, action: &Action, feedback: &Feedback);
}

/// Greedy allocator: fills arms in descending `scores` order up to their
/// capacities. Ties go to the lower index.
pub fn oracle(scores: &[f64], capacities: &[u32], plays: u32) -> Result<Action> {
    greedy_allocation(scores, capacities, plays)
}

/// Problem facts every policy may rely on.
#[derive(Debug, Clone)]
pub struct ProblemInfo {
    pub arms: usize,
    pub plays: u32,
    pub horizon: u64,
    pub model: RewardModel,
}

impl ProblemInfo {
    pub fn from_env(env: &Environment, horizon: u64) -> Self {
        Self {
            arms: env.num_arms(),
            plays: env.plays(),
            horizon,
            model: env.reward_model(),
        }
    }
}

/// Registered algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Orchexplore,
    OrchexploreKc,
    Mpsesa,
    Mpse,
    MpsesaKc,
    Etcucb,
    KlucbKc,
    TsKc,
    SeKc,
    UcbFlat,
    TsFlat,
    SeFlat,
    Optimal,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 13] = [
        PolicyKind::Orchexplore,
        PolicyKind::OrchexploreKc,
        PolicyKind::Mpsesa,
        PolicyKind::Mpse,
        PolicyKind::MpsesaKc,
        PolicyKind::Etcucb,
        PolicyKind::KlucbKc,
        PolicyKind::TsKc,
        PolicyKind::SeKc,
        PolicyKind::UcbFlat,
        PolicyKind::TsFlat,
        PolicyKind::SeFlat,
        PolicyKind::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Orchexplore => "orchexplore",
            PolicyKind::OrchexploreKc => "orchexplore_kc",
            PolicyKind::Mpsesa => "mpsesa",
            PolicyKind::Mpse => "mpse",
            PolicyKind::MpsesaKc => "mpsesa_kc",
            PolicyKind::Etcucb => "etcucb",
            PolicyKind::KlucbKc => "klucb_kc",
            PolicyKind::TsKc => "ts_kc",
            PolicyKind::SeKc => "se_kc",
            PolicyKind::UcbFlat => "ucb_flat",
            PolicyKind::TsFlat => "ts_flat",
            PolicyKind::SeFlat => "se_flat",
            PolicyKind::Optimal => "optimal",
        }
    }

    pub fn registered() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownPolicy {
                name: s.to_string(),
                registered: Self::registered(),
            })
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_ACTION_CAP: u64 = 1_000_000;

fn default_gamma() -> f64 {
    1.0
}
fn default_xi() -> f64 {
    1.0
}
fn default_cap() -> u64 {
    DEFAULT_ACTION_CAP
}

/// A policy together with its tunable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Output label; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Elimination gap scale.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Confidence scale of the capacity interval (`delta = 2 xi / T`).
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Explicit capacity-interval confidence, overriding the `xi` rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub width: WidthFn,
    /// Largest enumerated action space the flat baselines accept.
    #[serde(default = "default_cap")]
    pub action_cap: u64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            label: None,
            gamma: default_gamma(),
            xi: default_xi(),
            delta: None,
            width: WidthFn::Uci,
            action_cap: DEFAULT_ACTION_CAP,
        }
    }

    pub fn with_width(mut self, width: WidthFn) -> Self {
        self.width = width;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    /// Confidence level of the capacity interval for a horizon `T`.
    ///
    /// `2 xi / T` by default (`xi = 1` gives `2 / T`). With the Hoeffding
    /// width the per-time interval is made uniform by a further `1 / T`.
    pub fn capacity_delta(&self, horizon: u64) -> f64 {
        let t = horizon.max(1) as f64;
        let base = self.delta.unwrap_or(2.0 * self.xi / t);
        match self.width {
            WidthFn::Uci => base,
            WidthFn::Hfd => base / t,
        }
    }

    /// Checks that the policy can run on `env`.
    pub fn check(&self, env: &Environment) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.xi > 0.0) {
            return Err(Error::Config(format!(
                "{}: gamma and xi must be positive",
                self.label()
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("{}: delta must lie in (0, 1)", self.label())));
            }
        }
        if matches!(self.kind, PolicyKind::UcbFlat | PolicyKind::TsFlat | PolicyKind::SeFlat) {
            let size = action_space_size(env.num_arms(), env.plays());
            if size > u128::from(self.action_cap) {
                return Err(Error::ActionSpaceTooLarge {
                    cardinality: size,
                    cap: u128::from(self.action_cap),
                });
            }
        }
        Ok(())
    }

    /// Instantiates the policy for one replication.
    pub fn build(&self, env: &Environment, horizon: u64, rng: ChaCha8Rng) -> Result<Box<dyn Policy>> {
        self.check(env)?;
        let info = ProblemInfo::from_env(env, horizon);
        let label = self.label();
        let delta = self.capacity_delta(horizon);
        let caps = env.capacities();
        Ok(match self.kind {
            PolicyKind::Orchexplore => Box::new(OrchExplore::new(info, delta, self.width, rng, label)),
            PolicyKind::OrchexploreKc => Box::new(OrchExplore::with_known_capacities(info, &caps, rng, label)),
            PolicyKind::Mpsesa => Box::new(MpSeSa::new(
                info,
                EliminationVariant::SharedArms,
                self.gamma,
                delta,
                self.width,
                label,
            )),
            PolicyKind::Mpse => Box::new(MpSeSa::new(
                info,
                EliminationVariant::UnitCapacity,
                self.gamma,
                delta,
                self.width,
                label,
            )),
            PolicyKind::MpsesaKc | PolicyKind::SeKc => Box::new(MpSeSa::new(
                info,
                EliminationVariant::KnownCapacity(caps),
                self.gamma,
                delta,
                self.width,
                label,
            )),
            PolicyKind::Etcucb => Box::new(EtcUcb::new(info, delta, self.width, label)),
            PolicyKind::KlucbKc => Box::new(KnownCapacityIndex::new(info, caps, IndexRule::KlUcb, rng, label)?),
            PolicyKind::TsKc => Box::new(KnownCapacityIndex::new(info, caps, IndexRule::Thompson, rng, label)?),
            PolicyKind::UcbFlat => Box::new(FlatBandit::new(info, FlatRule::Ucb1, rng, label)),
            PolicyKind::TsFlat => Box::new(FlatBandit::new(info, FlatRule::Thompson, rng, label)),
            PolicyKind::SeFlat => Box::new(FlatBandit::new(info, FlatRule::Elimination, rng, label)),
            PolicyKind::Optimal => Box::new(FixedAction::new(env.optimal_action().0, label)),
        })
    }
}

/// Replays one action forever; with the optimal action it is a zero-regret
/// reference.
#[derive(Debug, Clone)]
pub struct FixedAction {
    action: Action,
    label: String,
}

impl FixedAction {
    pub fn new(action: Action, label: impl Into<String>) -> Self {
        Self {
            action,
            label: label.into(),
        }
    }
}

impl Policy for FixedAction {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, _t: u64) -> Action {
        self.action.clone()
    }

    fn observe(&mut self, _t: u64, _action: &Action, _feedback: &Feedback) {}
}

/// Individual-exploration action: one play on every arm of `subset`, then the
/// leftover plays are spread up to each arm's capacity lower bound, first over
/// `subset` and then over the rest of `pool`. Every play assignment stays at or
/// below the lower bound, so each pulled arm yields a valid per-load sample.
/// Any plays that still cannot be placed go round-robin over `subset`.
pub(crate) fn individual_exploration_action(
    arms: usize,
    plays: u32,
    subset: &[usize],
    pool: &[usize],
    m_lower: &[u32],
) -> Action {
    let mut action = Action::zeros(arms);
    let mut remaining = plays;
    for &k in subset {
        if remaining == 0 {
            break;
        }
        action.0[k] = 1;
        remaining -= 1;
    }
    let others = pool.iter().copied().filter(|k| !subset.contains(k));
    for k in subset.iter().copied().chain(others) {
        if remaining == 0 {
            break;
        }
        let room = m_lower[k].saturating_sub(action.0[k]);
        let give = room.min(remaining);
        action.0[k] += give;
        remaining -= give;
    }
    let mut i = 0;
    while remaining > 0 && !subset.is_empty() {
        action.0[subset[i % subset.len()]] += 1;
        remaining -= 1;
        i += 1;
    }
    action
}

/// Exploitation action over `order` (already sorted best first): each arm gets
/// `caps[k]` plays until the plays run out. Returns the action and the number
/// of arms used.
pub(crate) fn exploitation_action(arms: usize, plays: u32, order: &[usize], caps: &[u32]) -> (Action, usize) {
    let mut action = Action::zeros(arms);
    let mut remaining = plays;
    let mut used = 0;
    for &k in order {
        if remaining == 0 {
            break;
        }
        let give = caps[k].max(1).min(remaining);
        action.0[k] = give;
        remaining -= give;
        used += 1;
    }
    if remaining > 0 {
        if let Some(&last) = order.last() {
            action.0[last] += remaining;
        }
    }
    (action, used)
}

/// Arms of `set` sorted by descending `scores`, ties by lower index.
pub(crate) fn ordered_subset(set: &[usize], scores: &[f64]) -> Vec<usize> {
    let sub: Vec<f64> = set.iter().map(|&k| scores[k]).collect();
    descending_order(&sub).into_iter().map(|i| set[i]).collect()
}

/// Smallest prefix of `order` whose capacities cover `plays`; the full length
/// when they never do.
pub(crate) fn covering_size(order: &[usize], caps: &[u32], plays: u32) -> usize {
    let mut total = 0u64;
    for (i, &k) in order.iter().enumerate() {
        total += u64::from(caps[k]);
        if total >= u64::from(plays) {
            return i + 1;
        }
    }
    order.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let mu = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
        let m = [2, 4, 3, 3, 2, 1, 3, 4, 2];
        assert_eq!(oracle(&mu, &m, 7).unwrap().0, vec![2, 4, 1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(oracle(&[0.0; 9], &[1; 9], 7).unwrap().0, vec![1, 1, 1, 1, 1, 1, 1, 0, 0]);
        assert_eq!(oracle(&[0.1, 0.9, 0.2], &[1, 5, 1], 3).unwrap().0, vec![0, 3, 0]);
        assert!(matches!(oracle(&[0.1, 0.2], &[1, 1], 3), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn individual_exploration_stays_below_lower_bounds() {
        let m_lower = [1, 3, 1, 2, 1];
        let pool = [0, 1, 2, 3, 4];
        let a = individual_exploration_action(5, 4, &[4], &pool, &m_lower);
        assert_eq!(a.total(), 4);
        for (k, &c) in a.0.iter().enumerate() {
            assert!(c <= m_lower[k]);
        }
        assert_eq!(a.0[4], 1);
    }

    #[test]
    fn covering_size_examples() {
        let caps = [2, 4, 3, 3];
        assert_eq!(covering_size(&[0, 1, 2, 3], &caps, 7), 3);
        assert_eq!(covering_size(&[1, 0], &caps, 7), 2);
        assert_eq!(covering_size(&[0], &caps, 7), 1);
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        let err = "bogus".parse::<PolicyKind>().unwrap_err();
        assert!(err.to_string().contains("orchexplore"));
    }
}
