//! Baselines that ignore the shareable-arm structure: every N-play allocation
//! becomes one arm of a single-play bandit whose payoff is the realized total
//! reward divided by N.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Policy, ProblemInfo};
use crate::capest::elimination_radius;
use crate::env::{Action, Feedback};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatRule {
    Ucb1,
    /// Gaussian-prior Thompson sampling, `theta ~ N(mean, 1 / (n + 1))`.
    Thompson,
    /// Round-robin successive elimination.
    Elimination,
}

/// `|A| = C(N + K - 1, K - 1)`, saturating at `u128::MAX`.
pub fn action_space_size(arms: usize, plays: u32) -> u128 {
    if arms == 0 {
        return 0;
    }
    let n = plays as u128;
    let r = (arms - 1) as u128;
    let (top, k) = (n + r, r.min(n));
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (top - k + i) / i stays integral at every step
        match acc.checked_mul(top - k + i) {
            Some(v) => acc = v / i,
            None => return u128::MAX,
        }
    }
    acc
}

/// Every allocation of `plays` over `arms`, in lexicographically decreasing
/// order of the first entry.
pub fn enumerate_actions(arms: usize, plays: u32) -> Vec<Action> {
    fn rec(prefix: &mut Vec<u32>, arms: usize, left: u32, out: &mut Vec<Action>) {
        if prefix.len() + 1 == arms {
            prefix.push(left);
            out.push(Action(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(prefix, arms, left - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if arms > 0 {
        rec(&mut Vec::with_capacity(arms), arms, plays, &mut out);
    }
    out
}

pub struct FlatBandit {
    info: ProblemInfo,
    actions: Vec<Action>,
    means: Vec<f64>,
    counts: Vec<u64>,
    rule: FlatRule,
    /// Surviving meta-arms for elimination.
    active: Vec<usize>,
    cursor: usize,
    rounds: u64,
    last: usize,
    rng: ChaCha8Rng,
    label: String,
}

impl FlatBandit {
    pub fn new(info: ProblemInfo, rule: FlatRule, rng: ChaCha8Rng, label: impl Into<String>) -> Self {
        let actions = enumerate_actions(info.arms, info.plays);
        let n = actions.len();
        Self {
            info,
            actions,
            means: vec![0.0; n],
            counts: vec![0; n],
            rule,
            active: (0..n).collect(),
            cursor: 0,
            rounds: 0,
            last: 0,
            rng,
            label: label.into(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    fn pick_ucb(&self, t: u64) -> usize {
        if let Some(i) = self.counts.iter().position(|&c| c == 0) {
            return i;
        }
        let log_t = 2.0 * (t.max(1) as f64).ln();
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (&m, &c)) in self.means.iter().zip(&self.counts).enumerate() {
            let v = m + (log_t / c as f64).sqrt();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    fn pick_thompson(&mut self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..self.means.len() {
            let z: f64 = self.rng.sample(StandardNormal);
            let v = self.means[i] + z / ((self.counts[i] + 1) as f64).sqrt();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    fn pick_elimination(&mut self) -> usize {
        if self.cursor >= self.active.len() {
            self.close_round();
        }
        let i = self.active[self.cursor];
        self.cursor += 1;
        i
    }

    fn close_round(&mut self) {
        self.rounds += 1;
        self.cursor = 0;
        if self.active.len() > 1 {
            let radius = elimination_radius(self.rounds, self.info.horizon as f64).expect("rounds >= 1");
            let best = self
                .active
                .iter()
                .map(|&i| self.means[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let means = &self.means;
            self.active.retain(|&i| means[i] > best - radius);
        }
    }
}

impl Policy for FlatBandit {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, t: u64) -> Action {
        self.last = match self.rule {
            FlatRule::Ucb1 => self.pick_ucb(t),
            FlatRule::Thompson => self.pick_thompson(),
            FlatRule::Elimination => self.pick_elimination(),
        };
        self.actions[self.last].clone()
    }

    fn observe(&mut self, _t: u64, _action: &Action, feedback: &Feedback) {
        let payoff = feedback.total_reward() / f64::from(self.info.plays.max(1));
        let i = self.last;
        self.counts[i] += 1;
        self.means[i] += (payoff - self.means[i]) / self.counts[i] as f64;
    }
}
