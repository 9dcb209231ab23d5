//! Two-phase baseline: explore every arm individually and unitedly until all
//! capacities are learned, then commit to the rounded capacity estimates and
//! run UCB on the per-load means.

use std::collections::VecDeque;

use super::{covering_size, exploitation_action, individual_exploration_action, ordered_subset, Policy, ProblemInfo};
use crate::capest::{ArmStatistics, WidthFn};
use crate::env::{Action, Feedback};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtcPhase {
    Explore,
    Ucb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Individual,
    United { closes_round: bool },
    Exploit,
}

pub struct EtcUcb {
    info: ProblemInfo,
    stats: Vec<ArmStatistics>,
    capacities: Vec<u32>,
    phase: EtcPhase,
    switched_at: Option<u64>,
    delta: f64,
    width: WidthFn,
    queue: VecDeque<(Action, SlotKind)>,
    in_flight: Option<SlotKind>,
    label: String,
}

impl EtcUcb {
    pub fn new(info: ProblemInfo, delta: f64, width: WidthFn, label: impl Into<String>) -> Self {
        Self {
            stats: vec![ArmStatistics::new(info.plays); info.arms],
            capacities: vec![1; info.arms],
            info,
            phase: EtcPhase::Explore,
            switched_at: None,
            delta,
            width,
            queue: VecDeque::new(),
            in_flight: None,
            label: label.into(),
        }
    }

    pub fn phase(&self) -> EtcPhase {
        self.phase
    }

    /// Slot at which the UCB phase began.
    pub fn switched_at(&self) -> Option<u64> {
        self.switched_at
    }

    /// Committed capacity estimates (meaningful after the switch).
    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn stats(&self) -> &[ArmStatistics] {
        &self.stats
    }

    /// `mu_hat + sqrt(2 ln t / n)`.
    pub fn ucb_index(mu_hat: f64, n: u64, t: f64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        mu_hat + (2.0 * t.max(1.0).ln() / n as f64).sqrt()
    }

    fn commit(&mut self, t: u64) {
        let plays = self.info.plays;
        self.capacities = self
            .stats
            .iter()
            .map(|s| {
                if s.mu_hat > 0.0 && s.ue_count > 0 {
                    ((s.nu_hat / s.mu_hat).round().max(1.0) as u32).min(plays)
                } else {
                    s.m_lower
                }
            })
            .collect();
        self.phase = EtcPhase::Ucb;
        self.switched_at = Some(t);
    }

    fn plan_exploration(&mut self, t: u64) {
        let unlearned: Vec<usize> = (0..self.info.arms).filter(|&k| !self.stats[k].is_learned()).collect();
        if unlearned.is_empty() {
            self.commit(t);
            return;
        }
        let lower: Vec<u32> = self.stats.iter().map(|s| s.m_lower).collect();
        let everyone: Vec<usize> = (0..self.info.arms).collect();
        let chunk = (self.info.plays as usize).max(1);
        for subset in unlearned.chunks(chunk) {
            let action = individual_exploration_action(self.info.arms, self.info.plays, subset, &everyone, &lower);
            self.queue.push_back((action, SlotKind::Individual));
        }
        let last = unlearned.len() - 1;
        for (i, &k) in unlearned.iter().enumerate() {
            let mut action = Action::zeros(self.info.arms);
            action.0[k] = self.info.plays;
            self.queue.push_back((action, SlotKind::United { closes_round: i == last }));
        }
    }

    fn ucb_action(&self, t: u64) -> Action {
        let everyone: Vec<usize> = (0..self.info.arms).collect();
        let indices: Vec<f64> = self
            .stats
            .iter()
            .map(|s| Self::ucb_index(s.mu_hat, s.ie_count, t as f64))
            .collect();
        let order = ordered_subset(&everyone, &indices);
        let size = covering_size(&order, &self.capacities, self.info.plays);
        exploitation_action(self.info.arms, self.info.plays, &order[..size], &self.capacities).0
    }
}

impl Policy for EtcUcb {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, t: u64) -> Action {
        if self.phase == EtcPhase::Explore && self.queue.is_empty() {
            self.plan_exploration(t);
        }
        if self.phase == EtcPhase::Ucb {
            self.in_flight = Some(SlotKind::Exploit);
            return self.ucb_action(t);
        }
        let (action, kind) = self.queue.pop_front().expect("exploration round queued");
        self.in_flight = Some(kind);
        action
    }

    fn observe(&mut self, _t: u64, _action: &Action, feedback: &Feedback) {
        let Some(kind) = self.in_flight.take() else {
            return;
        };
        match kind {
            SlotKind::Individual => {
                for e in &feedback.entries {
                    let s = &mut self.stats[e.arm];
                    if e.plays <= s.m_lower {
                        s.record_ie(e.reward / f64::from(e.plays));
                    }
                }
            }
            SlotKind::United { closes_round } => {
                for e in &feedback.entries {
                    let s = &mut self.stats[e.arm];
                    if e.plays >= s.m_upper {
                        s.record_ue(e.reward);
                    }
                }
                if closes_round {
                    for s in &mut self.stats {
                        s.update_bounds(self.delta, self.info.plays, self.width);
                    }
                }
            }
            SlotKind::Exploit => {
                for e in &feedback.entries {
                    let cap = self.capacities[e.arm];
                    self.stats[e.arm].record_ie(e.reward / f64::from(e.plays.min(cap)));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmSpec, Environment};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ucb_index_value() {
        let t = std::f64::consts::E.powi(4);
        assert!((EtcUcb::ucb_index(0.5, 8, t) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn switches_once_when_all_capacities_learned() {
        let env = Environment::new(
            vec![
                ArmSpec::bernoulli(0.95, 1),
                ArmSpec::bernoulli(0.9, 2),
                ArmSpec::bernoulli(0.85, 1),
            ],
            2,
            0,
        )
        .unwrap();
        let mut p = EtcUcb::new(ProblemInfo::from_env(&env, 50_000), 0.05, WidthFn::Uci, "etc");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut switches = 0;
        let mut prev = p.phase();
        for t in 1..50_000 {
            let explored_before = p.phase() == EtcPhase::Explore;
            let a = p.select_action(t);
            a.validate(3, 2).unwrap();
            if p.phase() != prev {
                switches += 1;
                assert!(explored_before);
                assert!(p.stats().iter().all(ArmStatistics::is_learned));
                assert_eq!(p.switched_at(), Some(t));
            }
            prev = p.phase();
            let fb = env.sample_feedback(&a, &mut rng).unwrap();
            p.observe(t, &a, &fb);
        }
        assert_eq!(switches, 1);
        assert_eq!(p.capacities(), &[1, 2, 1]);
    }

    #[test]
    fn exploration_rounds_cover_unlearned_arms() {
        let means = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
        let caps = [2, 4, 3, 3, 2, 1, 3, 4, 2];
        let arms = means.iter().zip(caps).map(|(&mu, m)| ArmSpec::bernoulli(mu, m)).collect();
        let env = Environment::new(arms, 7, 0).unwrap();
        let mut p = EtcUcb::new(ProblemInfo::from_env(&env, 100_000), 2e-5, WidthFn::Uci, "etc");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // the first round is two individual slots then nine united slots
        let mut seen_ie = [false; 9];
        let mut seen_ue = [false; 9];
        for t in 1..=11 {
            let a = p.select_action(t);
            for (k, &c) in a.0.iter().enumerate() {
                if c == 7 {
                    seen_ue[k] = true;
                } else if c > 0 {
                    seen_ie[k] = true;
                }
            }
            let fb = env.sample_feedback(&a, &mut rng).unwrap();
            p.observe(t, &a, &fb);
        }
        assert!(seen_ie.iter().all(|&b| b));
        assert!(seen_ue.iter().all(|&b| b));
        assert_eq!(p.phase(), EtcPhase::Explore);
    }
}
