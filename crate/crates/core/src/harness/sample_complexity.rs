//! Single-arm capacity-learning experiment and the confidence-width table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::replication_rngs;
use crate::capest::{phi, rho, ArmStatistics, WidthFn};
use crate::env::ArmSpec;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SLOTS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityConfig {
    pub arm: ArmSpec,
    /// Plays of a united exploration; at least the capacity.
    pub plays: u32,
    pub delta: f64,
    pub reps: usize,
    pub seed: u64,
    pub max_slots: u64,
    pub width: WidthFn,
}

impl SampleComplexityConfig {
    /// Defaults: `plays = max(10, m)`, UCI width, 10^7 slot cap.
    pub fn new(arm: ArmSpec, delta: f64, reps: usize, seed: u64) -> Self {
        Self {
            plays: arm.capacity.max(10),
            arm,
            delta,
            reps,
            seed,
            max_slots: DEFAULT_MAX_SLOTS,
            width: WidthFn::Uci,
        }
    }
}

/// One replication: the first slot at which the interval closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub slots: u64,
    /// Individual (per-load) samples at stopping.
    pub ie_samples: u64,
    /// United (full-load) samples at stopping.
    pub ue_samples: u64,
    pub estimate: Option<u32>,
    pub correct: bool,
    /// Slot cap reached before the interval closed.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityReport {
    pub config: SampleComplexityConfig,
    pub records: Vec<StoppingRecord>,
    pub censored: usize,
    /// Correct estimates among uncensored replications.
    pub correct_rate: f64,
    pub median_ie_samples: f64,
    pub median_ue_samples: f64,
    /// `49 m^2 / mu^2 * ln(2 / delta)`.
    pub sample_bound: f64,
    /// Uncensored replications whose individual sample count stays within
    /// `sample_bound`, over all uncensored replications.
    pub within_bound_rate: f64,
}

pub fn sample_bound(mean: f64, capacity: u32, delta: f64) -> f64 {
    let m = f64::from(capacity);
    49.0 * m * m / (mean * mean) * (2.0 / delta).ln()
}

/// Alternates individual (`a = 1`, odd slots) and united (`a = plays`, even
/// slots) pulls of one arm, refreshing the interval after every slot.
pub fn run_single_arm(cfg: &SampleComplexityConfig, rep: u64) -> StoppingRecord {
    let (mut rng, _) = replication_rngs(cfg.seed, rep);
    let arm = &cfg.arm;
    let mut s = ArmStatistics::new(cfg.plays);
    let full = f64::from(cfg.plays.min(arm.capacity));
    let mut slot = 0;
    while slot < cfg.max_slots && !s.is_learned() {
        slot += 1;
        let x = arm.sample_per_load(&mut rng);
        if slot % 2 == 1 {
            s.record_ie(x);
        } else {
            s.record_ue(full * x);
        }
        s.update_bounds(cfg.delta, cfg.plays, cfg.width);
    }
    let estimate = s.capacity_estimate();
    StoppingRecord {
        slots: slot,
        ie_samples: s.ie_count,
        ue_samples: s.ue_count,
        estimate,
        correct: estimate == Some(arm.capacity),
        censored: estimate.is_none(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn sample_complexity_experiment(cfg: &SampleComplexityConfig) -> Result<SampleComplexityReport> {
    cfg.arm.validate(0)?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta {} outside (0, 1)", cfg.delta)));
    }
    if cfg.reps == 0 {
        return Err(Error::OutOfRange("reps must be at least 1".into()));
    }
    if cfg.plays < cfg.arm.capacity {
        return Err(Error::OutOfRange(format!(
            "plays {} below capacity {}",
            cfg.plays, cfg.arm.capacity
        )));
    }
    let records: Vec<StoppingRecord> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| run_single_arm(cfg, r))
        .collect();
    let done: Vec<&StoppingRecord> = records.iter().filter(|r| !r.censored).collect();
    let bound = sample_bound(cfg.arm.mean, cfg.arm.capacity, cfg.delta);
    let rate = |pred: &dyn Fn(&StoppingRecord) -> bool| {
        if done.is_empty() {
            0.0
        } else {
            done.iter().filter(|r| pred(r)).count() as f64 / done.len() as f64
        }
    };
    Ok(SampleComplexityReport {
        censored: records.len() - done.len(),
        correct_rate: rate(&|r| r.correct),
        within_bound_rate: rate(&|r| r.ie_samples as f64 <= bound),
        median_ie_samples: median(done.iter().map(|r| r.ie_samples as f64).collect()),
        median_ue_samples: median(done.iter().map(|r| r.ue_samples as f64).collect()),
        sample_bound: bound,
        config: cfg.clone(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub t: u64,
    /// `phi(t, 1 / T)`.
    pub uci: f64,
    /// `rho(t, 1 / T^2)`.
    pub hfd: f64,
}

/// Roughly `points` log-spaced integers covering `[1, max]`, both ends included.
pub fn log_grid(max: u64, points: usize) -> Vec<u64> {
    let max = max.max(1);
    let points = points.max(2);
    let top = (max as f64).ln();
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (top * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|t| t.clamp(1, max))
        .collect();
    grid.dedup();
    if grid.last() != Some(&max) {
        grid.push(max);
    }
    grid
}

pub fn ci_width_table(horizon: u64, grid: &[u64]) -> Result<Vec<CiRow>> {
    if horizon < 2 {
        return Err(Error::OutOfRange("horizon must be at least 2".into()));
    }
    let t_cap = horizon as f64;
    grid.iter()
        .map(|&t| {
            if t == 0 {
                return Err(Error::OutOfRange("grid entries must be at least 1".into()));
            }
            Ok(CiRow {
                t,
                uci: phi(t, 1.0 / t_cap)?,
                hfd: rho(t, 1.0 / (t_cap * t_cap))?,
            })
        })
        .collect()
}
