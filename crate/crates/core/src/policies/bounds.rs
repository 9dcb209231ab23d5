//! Asymptotic regret coefficients: `lower * ln T` bounds every consistent
//! policy from below, `upper * ln T` is the limit guaranteed for OrchExplore.

use serde::Serialize;

use crate::capest::{kl_bernoulli, kl_gaussian};
use crate::env::{descending_order, Environment, RewardModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCoefficients {
    /// Number of arms pulled by the optimal action.
    pub least_favored_rank: usize,
    /// Sum over suboptimal arms of `Delta / kl`.
    pub mean_term: f64,
    /// Capacity terms of the lower bound (zero for Bernoulli environments).
    pub lower_capacity_term: f64,
    pub upper_capacity_term: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurves {
    pub coefficients: BoundCoefficients,
    pub horizons: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `w_k = f(a*) - m_k mu_k + mu_1`.
pub fn upper_weight(env: &Environment, arm: usize) -> f64 {
    let spec = &env.arms()[arm];
    let best = env.means().into_iter().fold(f64::NEG_INFINITY, f64::max);
    env.optimal_reward() - f64::from(spec.capacity) * spec.mean + best
}

pub fn bound_coefficients(env: &Environment, variance: f64) -> Result<BoundCoefficients> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::OutOfRange(format!("variance {variance} must be positive")));
    }
    let means = env.means();
    let caps = env.capacities();
    let order = descending_order(&means);
    let (a_star, l) = env.optimal_action();
    let model = env.reward_model();
    let ell = order[l - 1];
    let (mu_l, m_l) = (means[ell], f64::from(caps[ell]));
    let remainder = f64::from(a_star.0[ell]);

    let mut mean_term = 0.0;
    for &k in &order[l..] {
        let gap = mu_l - means[k];
        let kl = match model {
            RewardModel::Bernoulli => kl_bernoulli(means[k], mu_l),
            RewardModel::Gaussian { variance } => kl_gaussian(means[k], mu_l, variance)?,
        };
        if kl <= 0.0 {
            return Err(Error::InvalidEnvironment("tied means at the optimal boundary".into()));
        }
        mean_term += gap / kl;
    }

    let gaussian = matches!(model, RewardModel::Gaussian { .. });
    let mut lower_cap = 0.0;
    let mut upper_cap = 0.0;
    for &k in &order[..l - 1] {
        let (mu, m) = (means[k], f64::from(caps[k]));
        let ratio = m * m / (mu * mu);
        lower_cap += (mu - mu_l) * variance * ratio;
        upper_cap += 49.0 * upper_weight(env, k) * ratio;
    }
    let shrink = (m_l - remainder + 1.0).powi(2);
    let last = m_l * m_l / (shrink * mu_l * mu_l);
    if let Some(&next) = order.get(l) {
        lower_cap += (mu_l - means[next]) * variance * last;
    }
    upper_cap += 49.0 * upper_weight(env, ell) * last;
    if !gaussian {
        lower_cap = 0.0;
    }

    Ok(BoundCoefficients {
        least_favored_rank: l,
        mean_term,
        lower_capacity_term: lower_cap,
        upper_capacity_term: upper_cap,
        lower: mean_term + lower_cap,
        upper: mean_term + upper_cap,
    })
}

/// Both bounds evaluated as `coefficient * ln T` on the given horizons.
pub fn theoretical_curves(env: &Environment, variance: f64, horizons: &[f64]) -> Result<BoundCurves> {
    let coefficients = bound_coefficients(env, variance)?;
    let logs: Vec<f64> = horizons.iter().map(|&t| t.max(1.0).ln()).collect();
    Ok(BoundCurves {
        lower: logs.iter().map(|x| coefficients.lower * x).collect(),
        upper: logs.iter().map(|x| coefficients.upper * x).collect(),
        horizons: horizons.to_vec(),
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ArmSpec;

    const MEANS: [f64; 9] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1];
    const CAPS: [u32; 9] = [2, 4, 3, 3, 2, 1, 3, 4, 2];

    fn env(gaussian: bool) -> Environment {
        let arms = MEANS
            .iter()
            .zip(CAPS)
            .map(|(&mu, m)| {
                if gaussian {
                    ArmSpec::gaussian(mu, m, 0.5)
                } else {
                    ArmSpec::bernoulli(mu, m)
                }
            })
            .collect();
        Environment::new(arms, 7, 0).unwrap()
    }

    #[test]
    fn weight_of_first_arm() {
        assert!((upper_weight(&env(false), 0) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn gaussian_coefficients() {
        let c = bound_coefficients(&env(true), 0.5).unwrap();
        assert_eq!(c.least_favored_rank, 3);
        // 1/0.1 + ... + 1/0.6
        assert!((c.mean_term - 24.5).abs() < 1e-9);
        let cap = 0.2 * 0.5 * 4.0 / 0.81 + 0.1 * 0.5 * 16.0 / 0.64 + 0.1 * 0.5 * 9.0 / (9.0 * 0.49);
        assert!((c.lower_capacity_term - cap).abs() < 1e-12);
        assert!((c.lower - 26.345_867_976_820_36).abs() < 1e-9);
        assert!(c.upper > c.lower);
    }

    #[test]
    fn bernoulli_lower_bound_keeps_only_mean_term() {
        let c = bound_coefficients(&env(false), 0.5).unwrap();
        assert_eq!(c.lower, c.mean_term);
        assert_eq!(c.lower_capacity_term, 0.0);
    }

    #[test]
    fn unit_capacities_use_full_last_term() {
        let arms = vec![
            ArmSpec::gaussian(0.9, 1, 0.5),
            ArmSpec::gaussian(0.6, 1, 0.5),
            ArmSpec::gaussian(0.3, 1, 0.5),
        ];
        let e = Environment::new(arms, 2, 0).unwrap();
        let c = bound_coefficients(&e, 0.5).unwrap();
        let expected = 0.3 / ((0.3f64).powi(2) / 1.0) + 0.3 * 0.5 / 0.81 + 0.3 * 0.5 / 0.36;
        assert!((c.lower - expected).abs() < 1e-12);
    }

    #[test]
    fn curves_scale_with_log_horizon() {
        let c = theoretical_curves(&env(true), 0.5, &[1.0, 1e4]).unwrap();
        assert_eq!(c.lower[0], 0.0);
        assert!((c.lower[1] - c.coefficients.lower * 1e4f64.ln()).abs() < 1e-9);
    }
}
