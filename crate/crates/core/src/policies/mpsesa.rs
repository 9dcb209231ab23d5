//! Multiple-play successive elimination with shareable arms, plus its
//! unit-capacity (MP-SE) and known-capacity (KC) specializations.
//!
//! Each planning step orders the candidate set by `mu_hat`, computes the
//! expected size `L~` as the shortest prefix whose capacity lower bounds
//! cover N, and then either eliminates and runs one individual-exploration
//! round (`L~ < |J|`), or exploits once and runs a united-exploration round
//! over candidates with unlearned capacities.

use std::collections::VecDeque;

use super::{covering_size, exploitation_action, individual_exploration_action, ordered_subset, Policy, ProblemInfo};
use crate::capest::{elimination_radius, ArmStatistics, WidthFn};
use crate::env::{Action, Feedback};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EliminationVariant {
    /// Capacities learned with united exploration.
    SharedArms,
    /// Every capacity taken as 1 (classic multiple-play SE).
    UnitCapacity,
    /// True capacities given up front.
    KnownCapacity(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Individual { closes_round: bool },
    Exploit,
    United { closes_round: bool },
}

#[derive(Debug, Clone)]
struct Slot {
    action: Action,
    kind: SlotKind,
}

pub struct MpSeSa {
    info: ProblemInfo,
    stats: Vec<ArmStatistics>,
    /// Candidate set, ascending arm index.
    candidates: Vec<usize>,
    /// Shared exploration round counter.
    rounds: u64,
    expected_size: usize,
    gamma: f64,
    delta: f64,
    width: WidthFn,
    united: bool,
    queue: VecDeque<Slot>,
    in_flight: Option<SlotKind>,
    label: String,
}

impl MpSeSa {
    pub fn new(
        info: ProblemInfo,
        variant: EliminationVariant,
        gamma: f64,
        delta: f64,
        width: WidthFn,
        label: impl Into<String>,
    ) -> Self {
        let (stats, united) = match &variant {
            EliminationVariant::SharedArms => (vec![ArmStatistics::new(info.plays); info.arms], true),
            EliminationVariant::UnitCapacity => (vec![ArmStatistics::with_known_capacity(1); info.arms], false),
            EliminationVariant::KnownCapacity(caps) => {
                (caps.iter().map(|&m| ArmStatistics::with_known_capacity(m)).collect(), false)
            }
        };
        Self {
            candidates: (0..info.arms).collect(),
            expected_size: (info.plays as usize).min(info.arms),
            info,
            stats,
            rounds: 1,
            gamma,
            delta,
            width,
            united,
            queue: VecDeque::new(),
            in_flight: None,
            label: label.into(),
        }
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn expected_size(&self) -> usize {
        self.expected_size
    }

    pub fn stats(&self) -> &[ArmStatistics] {
        &self.stats
    }

    /// Number of slots already planned but not yet played.
    pub fn queued_slots(&self) -> usize {
        self.queue.len()
    }

    fn means(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mu_hat).collect()
    }

    fn lower_bounds(&self) -> Vec<u32> {
        self.stats.iter().map(|s| s.m_lower).collect()
    }

    fn plan(&mut self) {
        let means = self.means();
        let lower = self.lower_bounds();
        let order = ordered_subset(&self.candidates, &means);
        self.expected_size = covering_size(&order, &lower, self.info.plays);
        let size = self.expected_size;

        if size < self.candidates.len() {
            self.eliminate(&order, size);
            self.plan_individual_round(&lower);
        } else {
            let (action, _) = exploitation_action(self.info.arms, self.info.plays, &order[..size], &lower);
            self.queue.push_back(Slot {
                action,
                kind: SlotKind::Exploit,
            });
            if self.united {
                let pending: Vec<usize> = self
                    .candidates
                    .iter()
                    .copied()
                    .filter(|&k| !self.stats[k].is_learned())
                    .collect();
                let last = pending.len().saturating_sub(1);
                for (i, &k) in pending.iter().enumerate() {
                    let mut action = Action::zeros(self.info.arms);
                    action.0[k] = self.info.plays;
                    self.queue.push_back(Slot {
                        action,
                        kind: SlotKind::United { closes_round: i == last },
                    });
                }
            }
        }
    }

    fn eliminate(&mut self, order: &[usize], size: usize) {
        let pivot = self.stats[order[size - 1]].mu_hat;
        let radius = elimination_radius(self.rounds, self.info.horizon as f64).expect("rounds start at 1");
        let threshold = pivot - self.gamma * radius;
        let stats = &self.stats;
        self.candidates.retain(|&k| stats[k].mu_hat > threshold);
    }

    fn plan_individual_round(&mut self, lower: &[u32]) {
        let chunk = (self.info.plays as usize).max(1);
        let subsets: Vec<Vec<usize>> = self.candidates.chunks(chunk).map(<[usize]>::to_vec).collect();
        let last = subsets.len().saturating_sub(1);
        for (i, subset) in subsets.iter().enumerate() {
            let action =
                individual_exploration_action(self.info.arms, self.info.plays, subset, &self.candidates, lower);
            self.queue.push_back(Slot {
                action,
                kind: SlotKind::Individual { closes_round: i == last },
            });
        }
    }
}

impl Policy for MpSeSa {
    fn label(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, _t: u64) -> Action {
        if self.queue.is_empty() {
            self.plan();
        }
        let slot = self.queue.pop_front().expect("planning always queues a slot");
        self.in_flight = Some(slot.kind);
        slot.action
    }

    fn observe(&mut self, _t: u64, _action: &Action, feedback: &Feedback) {
        let Some(kind) = self.in_flight.take() else {
            return;
        };
        match kind {
            SlotKind::Individual { closes_round } => {
                for e in &feedback.entries {
                    let s = &mut self.stats[e.arm];
                    if e.plays <= s.m_lower {
                        s.record_ie(e.reward / f64::from(e.plays));
                    }
                }
                if closes_round {
                    self.rounds += 1;
                }
            }
            SlotKind::Exploit => {
                for e in &feedback.entries {
                    let s = &mut self.stats[e.arm];
                    if e.plays <= s.m_lower {
                        s.record_ie(e.reward / f64::from(e.plays));
                    }
                }
                self.rounds += 1;
            }
            SlotKind::United { closes_round } => {
                for e in &feedback.entries {
                    let s = &mut self.stats[e.arm];
                    if e.plays >= s.m_upper {
                        s.record_ue(e.reward);
                    }
                }
                if closes_round {
                    for &k in &self.candidates {
                        self.stats[k].update_bounds(self.delta, self.info.plays, self.width);
                    }
                }
            }
        }
    }
}
