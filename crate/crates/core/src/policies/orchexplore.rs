//! Orchestrative exploration: alternates parsimonious individual exploration
//! (PIE) on odd slots with parsimonious united exploration (PUE) on even slots
//! while some empirically optimal arm still has an unlearned capacity.
//!
//! PIE plays `oracle(mu_hat, m_lower)` and, with probability 1/2, moves one
//! play from the least favored selected arm to a uniformly chosen unselected
//! arm whose KL-UCB index reaches that arm's mean. PUE lifts the means of the
//! arms still needing a capacity estimate by `M` and plays
//! `oracle(mu_hat', m_upper)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{oracle, Policy, ProblemInfo};
use crate::capest::{klucb_index, ArmStatistics, WidthFn};
use crate::env::{descending_order, Action, Feedback, RewardModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Individual,
    United,
}

pub struct OrchExplore {
    info: ProblemInfo,
    stats: Vec<ArmStatistics>,
    /// Arms selected by the last individual-exploration oracle call.
    optimal_set: Vec<bool>,
    least_favored: usize,
    /// Arms scheduled for united exploration.
    united_set: Vec<usize>,
    delta: f64,
    width: WidthFn,
    priority: f64,
    known_capacity: bool,
    rng: ChaCha8Rng,
    pending: Option<Phase>,
    label: String,
}

impl OrchExplore {
    pub fn new(info: ProblemInfo, delta: f64, width: WidthFn, rng: ChaCha8Rng, label: impl Into<String>) -> Self {
        let stats = vec![ArmStatistics::new(info.plays); info.arms];
        Self::from_parts(info, stats, delta, width, false, rng, label.into())
    }

    /// Variant fed with the true capacities: it never runs united exploration.
    pub fn with_known_capacities(info: ProblemInfo, capacities: &[u32], rng: ChaCha8Rng, label: impl Into<String>) -> Self {
        let stats = capacities.iter().map(|&m| ArmStatistics::with_known_capacity(m)).collect();
        let delta = 2.0 / info.horizon.max(1) as f64;
        Self::from_parts(info, stats, delta, WidthFn::Uci, true, rng, label.into())
    }

    fn from_parts(
        info: ProblemInfo,
        stats: Vec<ArmStatistics>,
        delta: f64,
        width: WidthFn,
        known_capacity: bool,
        rng: ChaCha8Rng,
        label: String,
    ) -> Self {
        let priority = match info.model {
            RewardModel::Bernoulli => 1.0,
            RewardModel::Gaussian { .. } => 5.0,
        };
        let n = (info.plays as usize).min(info.arms);
        let mut optimal_set = vec![false; info.arms];
        optimal_set[..n].iter_mut().for_each(|s| *s = true);
        Self {
            least_favored: n.saturating_sub(1),
            info,
            stats,
            optimal_set,
            united_set: Vec::new(),
            delta,
            width,
            priority,
            known_capacity,
            rng,
            pending: None,
            label,
        }
    }

    pub fn stats(&self) -> &[ArmStatistics] {
        &self.stats
    }

    /// Arms currently awaiting united exploration.
    pub fn united_set(&self) -> &[usize] {
        &self.united_set
    }

    pub fn least_favored(&self) -> usize {
        self.least_favored
    }

    pub fn optimal_set(&self) -> Vec<usize> {
        (0..self.info.arms).filter(|&k| self.optimal_set[k]).collect()
    }

    /// Overwrites the per-load mean estimates (used to replay traces with
    /// known means).
    pub fn set_means(&mut self, means: &[f64]) {
        for (s, &m) in self.stats.iter_mut().zip(means) {
            s.mu_hat = m;
        }
    }

    /// KL-UCB index of arm `k` at slot `t`; infinite before its first sample.
    pub fn index(&self, k: usize, t: u64) -> f64 {
        let s = &self.stats[k];
        if s.ie_count == 0 {
            return f64::INFINITY;
        }
        klucb_index(s.mu_hat, s.ie_count, t as f64, self.info.model).unwrap_or(f64::INFINITY)
    }

    fn means(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mu_hat).collect()
    }

    fn individual_step(&mut self, t: u64) -> Action {
        let means = self.means();
        let lower: Vec<u32> = self.stats.iter().map(|s| s.m_lower).collect();
        let mut action = oracle(&means, &lower, self.info.plays).expect("lower bounds cover the plays");

        // The least favored selected arm is the last one the oracle filled.
        let order = descending_order(&means);
        let selected: Vec<usize> = order.iter().copied().filter(|&k| action.0[k] > 0).collect();
        self.optimal_set = vec![false; self.info.arms];
        for &k in &selected {
            self.optimal_set[k] = true;
        }
        self.least_favored = *selected.last().expect("at least one arm is played");

        let threshold = means[self.least_favored];
        let candidates: Vec<usize> = (0..self.info.arms)
            .filter(|&k| !self.optimal_set[k] && self.index(k, t) >= threshold)
            .collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.5) {
            let pick = candidates[self.rng.gen_range(0..candidates.len())];
            action.0[self.least_favored] -= 1;
            action.0[pick] = 1;
        }
        action
    }

    fn united_step(&self) -> Action {
        let mut boosted = self.means();
        for &k in &self.united_set {
            boosted[k] += self.priority;
        }
        let upper: Vec<u32> = self.stats.iter().map(|s| s.m_upper).collect();
        oracle(&boosted, &upper, self.info.plays).expect("upper bounds cover the plays")
    }

    fn refresh_united_set(&mut self) {
        let lf = self.least_favored;
        self.united_set = (0..self.info.arms)
            .filter(|&k| self.optimal_set[k] && k != lf && !self.stats[k].is_learned())
            .collect();
    }
}

impl Policy for OrchExplore {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, t: u64) -> Action {
        let phase = if t % 2 == 1 || self.united_set.is_empty() {
            Phase::Individual
        } else {
            Phase::United
        };
        self.pending = Some(phase);
        match phase {
            Phase::Individual => self.individual_step(t),
            Phase::United => self.united_step(),
        }
    }

    fn observe(&mut self, _t: u64, _action: &Action, feedback: &Feedback) {
        let Some(phase) = self.pending.take() else {
            return;
        };
        for e in &feedback.entries {
            let s = &mut self.stats[e.arm];
            match phase {
                // effective individual exploration: plays at or below m_lower
                Phase::Individual if e.plays <= s.m_lower => s.record_ie(e.reward / f64::from(e.plays)),
                Phase::United if e.plays >= s.m_upper => s.record_ue(e.reward),
                _ => {}
            }
        }
        if !self.known_capacity {
            for s in &mut self.stats {
                s.update_bounds(self.delta, self.info.plays, self.width);
            }
        }
        self.refresh_united_set();
    }
}
