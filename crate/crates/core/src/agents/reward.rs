use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    /// `α·1[s' = 1]`, credited when the next user state is realised.
    IndicatorNextState,
    /// `α·u(s, r) + sign·o`; the observation enters as an energy cost.
    Payoff,
    /// `α·s·r² + m`.
    JointQuadratic,
}

fn default_cost_sign() -> f64 {
    -1.0
}

fn default_utility() -> [[f64; 2]; 2] {
    [[0.0, 0.0], [0.0, 1.0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub variant: RewardVariant,
    pub alpha: f64,
    /// Sign applied to `o` under [`RewardVariant::Payoff`].
    #[serde(default = "default_cost_sign")]
    pub observation_cost_sign: f64,
    /// Satisfaction table `u[s][r]` for [`RewardVariant::Payoff`]; `s·r` by default.
    #[serde(default = "default_utility")]
    pub utility: [[f64; 2]; 2],
}

impl RewardSpec {
    pub fn new(variant: RewardVariant, alpha: f64) -> Self {
        Self { variant, alpha, observation_cost_sign: default_cost_sign(), utility: default_utility() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::config(format!("reward alpha must be positive and finite, got {}", self.alpha)));
        }
        if self.observation_cost_sign.abs() != 1.0 {
            return Err(Error::config("observation_cost_sign must be +1 or -1"));
        }
        if self.utility.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::config("utility table entries must be finite"));
        }
        Ok(())
    }
}

pub fn compute_reward(spec: &RewardSpec, s: u8, r: u8, m: u8, o: u8, s_next: u8) -> f64 {
    let (sf, rf, mf, of) = (s as f64, r as f64, m as f64, o as f64);
    match spec.variant {
        RewardVariant::IndicatorNextState => spec.alpha * f64::from(s_next),
        RewardVariant::Payoff => {
            spec.alpha * spec.utility[s as usize][r as usize] + spec.observation_cost_sign * of
        }
        RewardVariant::JointQuadratic => spec.alpha * sf * rf * rf + mf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_variants() {
        let ind = RewardSpec::new(RewardVariant::IndicatorNextState, 1.0);
        assert_eq!(compute_reward(&ind, 0, 0, 0, 0, 1), 1.0);
        let ind2 = RewardSpec::new(RewardVariant::IndicatorNextState, 2.0);
        assert_eq!(compute_reward(&ind2, 1, 1, 1, 1, 0), 0.0);

        let quad = RewardSpec::new(RewardVariant::JointQuadratic, 2.0);
        assert_eq!(compute_reward(&quad, 1, 1, 0, 0, 0), 2.0);
        assert_eq!(compute_reward(&quad, 1, 1, 1, 1, 0), 3.0);
        assert_eq!(compute_reward(&quad, 0, 1, 1, 1, 1), 1.0);

        let pay = RewardSpec::new(RewardVariant::Payoff, 1.5);
        assert_eq!(compute_reward(&pay, 1, 1, 1, 1, 0), 0.5);
        assert_eq!(compute_reward(&pay, 1, 0, 0, 0, 0), 0.0);
        let plus = RewardSpec { observation_cost_sign: 1.0, ..pay };
        assert_eq!(compute_reward(&plus, 1, 1, 1, 1, 0), 2.5);
    }

    #[test]
    fn unknown_variant_is_rejected() {
        let err = serde_json::from_str::<RewardSpec>(r#"{"variant": "cubic", "alpha": 1.0}"#);
        assert!(err.is_err());
        let ok: RewardSpec = serde_json::from_str(r#"{"variant": "payoff", "alpha": 1.0}"#).unwrap();
        assert_eq!(ok.observation_cost_sign, -1.0);
        assert!(RewardSpec::new(RewardVariant::JointQuadratic, 0.0).validate().is_err());
    }
}
