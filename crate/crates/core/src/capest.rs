//! Statistics core shared by every policy: confidence half-widths, the
//! integer capacity bounds and estimator, KL divergences and the KL-UCB index.

use serde::{Deserialize, Serialize};

use crate::env::RewardModel;
use crate::error::{Error, Result};

/// Anytime half-width `phi(x, delta) = sqrt((1 + 1/x) * ln(2 sqrt(x + 1) / delta) / (2x))`.
pub fn phi(x: u64, delta: f64) -> Result<f64> {
    if x == 0 {
        return Err(Error::OutOfRange("phi undefined at x = 0".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("phi needs delta in (0, 1), got {delta}")));
    }
    Ok(phi_unchecked(x, delta))
}

#[inline]
fn phi_unchecked(x: u64, delta: f64) -> f64 {
    let x = x as f64;
    ((1.0 + 1.0 / x) * (2.0 * (x + 1.0).sqrt() / delta).ln() / (2.0 * x)).sqrt()
}

/// Hoeffding half-width `rho(x, delta) = sqrt(ln(2 / delta) / (2x))`.
pub fn rho(x: u64, delta: f64) -> Result<f64> {
    if x == 0 {
        return Err(Error::OutOfRange("rho undefined at x = 0".into()));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::OutOfRange(format!("rho needs delta in (0, 2], got {delta}")));
    }
    Ok(rho_unchecked(x, delta))
}

#[inline]
fn rho_unchecked(x: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * x as f64)).sqrt()
}

/// Which half-width drives the capacity interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthFn {
    /// Uniform (anytime) interval built on `phi`.
    #[default]
    Uci,
    /// Per-time Hoeffding interval built on `rho`.
    Hfd,
}

impl WidthFn {
    pub fn width(self, x: u64, delta: f64) -> f64 {
        match self {
            WidthFn::Uci => phi_unchecked(x, delta),
            WidthFn::Hfd => rho_unchecked(x, delta),
        }
    }
}

impl std::str::FromStr for WidthFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uci" => Ok(WidthFn::Uci),
            "hfd" => Ok(WidthFn::Hfd),
            other => Err(Error::Config(format!("unknown width function `{other}` (uci, hfd)"))),
        }
    }
}

impl std::fmt::Display for WidthFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WidthFn::Uci => "uci",
            WidthFn::Hfd => "hfd",
        })
    }
}

/// Running per-arm estimates.
///
/// `mu_hat` averages per-load samples `R / a` from individual explorations,
/// `nu_hat` averages full-load samples `R` from united explorations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStatistics {
    pub mu_hat: f64,
    pub nu_hat: f64,
    pub ie_count: u64,
    pub ue_count: u64,
    pub m_lower: u32,
    pub m_upper: u32,
}

impl ArmStatistics {
    /// Fresh statistics: no samples, capacity interval `[1, plays]`.
    pub fn new(plays: u32) -> Self {
        Self {
            mu_hat: 0.0,
            nu_hat: 0.0,
            ie_count: 0,
            ue_count: 0,
            m_lower: 1,
            m_upper: plays.max(1),
        }
    }

    /// Statistics with the capacity pinned to a known value.
    pub fn with_known_capacity(capacity: u32) -> Self {
        Self {
            m_lower: capacity,
            m_upper: capacity,
            ..Self::new(capacity)
        }
    }

    pub fn record_ie(&mut self, per_load: f64) {
        self.ie_count += 1;
        self.mu_hat += (per_load - self.mu_hat) / self.ie_count as f64;
    }

    pub fn record_ue(&mut self, full_load: f64) {
        self.ue_count += 1;
        self.nu_hat += (full_load - self.nu_hat) / self.ue_count as f64;
    }

    pub fn is_learned(&self) -> bool {
        self.m_lower == self.m_upper
    }

    /// Refreshes the capacity interval from the current estimates.
    ///
    /// The candidate bounds are `ceil(nu / (mu + w))` and
    /// `floor(nu / (mu - w))` with `w = width(ie) + width(ue)`, clamped to
    /// `[1, plays]` and then monotonically against the previous bounds. No
    /// update happens before both sample kinds exist; the upper bound is only
    /// touched while `mu - w > 0`. A refresh that would cross the bounds is
    /// discarded.
    pub fn update_bounds(&mut self, delta: f64, plays: u32, width: WidthFn) {
        if self.ie_count == 0 || self.ue_count == 0 {
            return;
        }
        let w = width.width(self.ie_count, delta) + width.width(self.ue_count, delta);
        let plays_f = f64::from(plays.max(1));
        let clamp = |v: f64| v.clamp(1.0, plays_f) as u32;

        let mut lower = self.m_lower;
        let lo_den = self.mu_hat + w;
        if lo_den > 0.0 {
            let cand = (self.nu_hat / lo_den).ceil();
            if cand.is_finite() {
                lower = lower.max(clamp(cand));
            }
        }
        let mut upper = self.m_upper;
        let up_den = self.mu_hat - w;
        if up_den > 0.0 {
            let cand = (self.nu_hat / up_den).floor();
            if cand.is_finite() {
                upper = upper.min(clamp(cand));
            }
        }
        if lower <= upper {
            self.m_lower = lower;
            self.m_upper = upper;
        }
    }

    /// The capacity estimate, available once the interval holds one integer.
    pub fn capacity_estimate(&self) -> Option<u32> {
        self.is_learned().then_some(self.m_lower)
    }
}

/// Bernoulli KL divergence with `0 ln 0 = 0`; infinite when `q` sits on a
/// boundary that `p` does not.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        return f64::INFINITY;
    }
    let mut kl = 0.0;
    if p > 0.0 {
        kl += p * (p / q).ln();
    }
    if p < 1.0 {
        kl += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    kl.max(0.0)
}

/// KL divergence between two Gaussians sharing `variance`.
pub fn kl_gaussian(p: f64, q: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::OutOfRange(format!("variance must be positive, got {variance}")));
    }
    Ok((p - q).powi(2) / (2.0 * variance))
}

/// Exploration budget `ln t + 4 ln(max(ln t, 1))`.
pub fn exploration_budget(t: f64) -> f64 {
    let lt = t.ln();
    lt + 4.0 * lt.max(1.0).ln()
}

pub const KLUCB_TOLERANCE: f64 = 1e-9;
pub const KLUCB_MAX_ITERS: usize = 200;

/// KL-UCB index: the largest `q >= mu_hat` with `n * kl(mu_hat, q) <= budget(t)`.
pub fn klucb_index(mu_hat: f64, n: u64, t: f64, model: RewardModel) -> Result<f64> {
    if n == 0 {
        return Err(Error::OutOfRange("KL-UCB index needs at least one sample".into()));
    }
    let budget = exploration_budget(t.max(2.0));
    let n = n as f64;
    Ok(match model {
        RewardModel::Bernoulli => klucb_bernoulli(mu_hat.clamp(0.0, 1.0), n, budget),
        RewardModel::Gaussian { variance } => mu_hat + (2.0 * variance * budget / n).sqrt(),
    })
}

/// Bisection on `[p, 1]`. Stops once the bracket is within the tolerance and
/// `n * kl(p, q)` is within 1e-6 of the budget, or after the iteration cap.
fn klucb_bernoulli(p: f64, n: f64, budget: f64) -> f64 {
    if n * kl_bernoulli(p, 1.0) <= budget {
        return 1.0;
    }
    let (mut lo, mut hi) = (p, 1.0);
    for _ in 0..KLUCB_MAX_ITERS {
        if hi - lo <= KLUCB_TOLERANCE && (n * kl_bernoulli(p, lo) - budget).abs() <= 1e-6 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if n * kl_bernoulli(p, mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Elimination radius `U(tau, T) = 2 sqrt(2 / tau * max(ln(T / tau), 1))`.
pub fn elimination_radius(tau: u64, horizon: f64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::OutOfRange("elimination radius needs tau >= 1".into()));
    }
    let tau = tau as f64;
    let lg = (horizon / tau).ln().max(1.0);
    Ok(2.0 * (2.0 / tau * lg).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_values() {
        // high-precision evaluations of the closed form
        assert!((phi(1, 0.1).unwrap() - 1.828_197_435_681_924).abs() < 1e-12);
        assert!((phi(1_000_000, 0.01).unwrap() - 0.002_470_433_701_964_401).abs() < 1e-15);
        for x in [1, 10, 100] {
            assert!(phi(4 * x, 0.05).unwrap() < phi(x, 0.05).unwrap());
        }
        assert!(phi(0, 0.1).is_err());
        assert!(phi(3, 1.0).is_err());
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(17, 2.0).unwrap(), 0.0);
        assert!((rho(2, 0.05).unwrap() - 0.960_322_791_319_920_8).abs() < 1e-12);
        assert!((rho(8, 0.05).unwrap() - rho(2, 0.05).unwrap() / 2.0).abs() < 1e-15);
        assert!(rho(0, 0.5).is_err());
    }

    #[test]
    fn bounds_collapse_with_many_samples() {
        let mut s = ArmStatistics {
            mu_hat: 0.5,
            nu_hat: 1.5,
            ie_count: 1_000_000,
            ue_count: 1_000_000,
            ..ArmStatistics::new(7)
        };
        s.update_bounds(0.01, 7, WidthFn::Uci);
        assert_eq!((s.m_lower, s.m_upper), (3, 3));
        assert_eq!(s.capacity_estimate(), Some(3));
    }

    #[test]
    fn bounds_need_both_sample_kinds() {
        let mut s = ArmStatistics::new(7);
        s.record_ie(0.5);
        s.update_bounds(0.01, 7, WidthFn::Uci);
        assert_eq!((s.m_lower, s.m_upper), (1, 7));
        assert_eq!(s.capacity_estimate(), None);
    }

    #[test]
    fn upper_bound_guarded_by_denominator() {
        let mut s = ArmStatistics {
            mu_hat: 0.001,
            nu_hat: 0.004,
            ie_count: 3,
            ue_count: 3,
            ..ArmStatistics::new(7)
        };
        s.update_bounds(0.1, 7, WidthFn::Uci);
        assert_eq!(s.m_upper, 7);
        assert_eq!(s.m_lower, 1);
    }

    #[test]
    fn estimator_only_on_collapse() {
        let s = ArmStatistics {
            m_lower: 2,
            m_upper: 5,
            ..ArmStatistics::new(7)
        };
        assert_eq!(s.capacity_estimate(), None);
        assert_eq!(ArmStatistics::with_known_capacity(4).capacity_estimate(), Some(4));
    }

    #[test]
    fn kl_values() {
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(kl_bernoulli(p, p), 0.0);
        }
        assert!((kl_bernoulli(0.5, 0.75) - 0.143_841_036_225_890_46).abs() < 1e-12);
        for q in [0.1, 0.5, 0.9] {
            assert!((kl_bernoulli(0.0, q) + (1.0 - q).ln()).abs() < 1e-12);
        }
        assert_eq!(kl_bernoulli(0.3, 1.0), f64::INFINITY);
        assert_eq!(kl_gaussian(0.4, 0.4, 0.5).unwrap(), 0.0);
        assert!((kl_gaussian(0.9, 0.5, 0.5).unwrap() - 0.16).abs() < 1e-12);
        assert!(kl_gaussian(0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn klucb_examples() {
        let u = klucb_index(0.0, 1, 10.0, RewardModel::Bernoulli).unwrap();
        assert!((u - 0.996_442_562_775_04).abs() < 2e-9);
        let u = klucb_index(0.5, 1_000_000_000, 100.0, RewardModel::Bernoulli).unwrap();
        assert!((u - 0.5).abs() < 1e-3);
        let g = RewardModel::Gaussian { variance: 0.5 };
        let u = klucb_index(0.5, 4, std::f64::consts::E.powi(2), g).unwrap();
        assert!((u - 1.592_312_766_820_907).abs() < 1e-12);
        assert_eq!(klucb_index(1.0, 5, 50.0, RewardModel::Bernoulli).unwrap(), 1.0);
        assert!(klucb_index(0.3, 0, 50.0, RewardModel::Bernoulli).is_err());
    }

    #[test]
    fn radius_values() {
        // ln(T / tau) = 0 falls back to 1
        let r = elimination_radius(1000, 1000.0).unwrap();
        assert!((r - 2.0 * 0.002f64.sqrt()).abs() < 1e-12);
        let r = elimination_radius(1, std::f64::consts::E.powi(4)).unwrap();
        assert!((r - 2.0 * 8f64.sqrt()).abs() < 1e-12);
        assert!(elimination_radius(0, 10.0).is_err());
        let mut prev = f64::INFINITY;
        for tau in 1..=500 {
            let r = elimination_radius(tau, 500.0).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn uci_sharper_than_hoeffding_at_scale() {
        let horizon = 1_000_000f64;
        // a single sample is the one place the Hoeffding width is tighter
        assert!(phi(1, 1.0 / horizon).unwrap() > rho(1, 1.0 / (horizon * horizon)).unwrap());
        let mut t = 2u64;
        while t <= 1_000_000 {
            assert!(phi(t, 1.0 / horizon).unwrap() < rho(t, 1.0 / (horizon * horizon)).unwrap());
            t = (t as f64 * 1.07).ceil() as u64;
        }
    }

    proptest! {
        #[test]
        fn klucb_at_least_mean_and_decreasing(mu in 0.0f64..1.0, n in 1u64..10_000, t in 2.0f64..1e6) {
            let a = klucb_index(mu, n, t, RewardModel::Bernoulli).unwrap();
            let b = klucb_index(mu, n + 1, t, RewardModel::Bernoulli).unwrap();
            prop_assert!(a >= mu);
            prop_assert!(b <= a);
        }

        #[test]
        fn klucb_root_is_tight(mu in 0.0f64..0.99, n in 1u64..10_000, t in 2.0f64..1e6) {
            let q = klucb_index(mu, n, t, RewardModel::Bernoulli).unwrap();
            if q < 1.0 - 1e-6 {
                let gap = (n as f64 * kl_bernoulli(mu, q) - exploration_budget(t)).abs();
                prop_assert!(gap <= 1e-6, "gap {gap}");
            }
        }

        #[test]
        fn bounds_stay_ordered_and_monotone(
            samples in proptest::collection::vec((0.0f64..1.0, 0.0f64..4.0), 1..60),
            plays in 1u32..10,
        ) {
            let mut s = ArmStatistics::new(plays);
            for (ie, ue) in samples {
                let before = s;
                s.record_ie(ie);
                s.record_ue(ue);
                s.update_bounds(0.05, plays, WidthFn::Uci);
                prop_assert!(1 <= s.m_lower && s.m_lower <= s.m_upper && s.m_upper <= plays);
                prop_assert!(s.m_lower >= before.m_lower && s.m_upper <= before.m_upper);
            }
        }
    }
}
