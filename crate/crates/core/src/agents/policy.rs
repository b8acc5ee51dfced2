use serde::{Deserialize, Serialize};

use crate::agents::{softmax_probabilities, QTable, StateKey};
use crate::kernels::JointState;
use crate::{Error, Result};

/// A non-learning stochastic policy: probability of the informative prompt
/// (`r = 1`) for every observable key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenPolicy {
    pub key: StateKey,
    pub prompt_probability: Vec<f64>,
}

impl FrozenPolicy {
    pub fn uniform(key: StateKey) -> Self {
        Self::constant(key, 0.5)
    }

    pub fn constant(key: StateKey, p: f64) -> Self {
        Self { key, prompt_probability: vec![p; key.size()] }
    }

    /// Freeze the softmax policy implied by a Q-table.
    pub fn from_q_table(table: &QTable, temperature: f64) -> Self {
        let prompt_probability = table.rows().iter().map(|row| softmax_probabilities(row, temperature)[1]).collect();
        Self { key: table.key(), prompt_probability }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt_probability.len() != self.key.size() {
            return Err(Error::config(format!(
                "frozen policy over key {:?} needs {} probabilities, got {}",
                self.key,
                self.key.size(),
                self.prompt_probability.len()
            )));
        }
        if self.prompt_probability.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("frozen policy probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `P(r = 1 | state)`.
    pub fn prompt_probability(&self, state: JointState) -> f64 {
        self.prompt_probability[self.key.index(state)]
    }

    /// `[P(r=0), P(r=1)]`.
    pub fn action_probabilities(&self, state: JointState) -> [f64; 2] {
        let p = self.prompt_probability(state);
        [1.0 - p, p]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::QInit;

    #[test]
    fn frozen_from_biased_table() {
        let t = QTable::new(StateKey::UserMachine, QInit::PerAction([5.0, 0.0]));
        let p = FrozenPolicy::from_q_table(&t, 1.0);
        assert!(p.validate().is_ok());
        let want = 1.0 / (1.0 + 5.0f64.exp());
        assert!((p.prompt_probability(JointState::zero()) - want).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_rejected() {
        let p = FrozenPolicy { key: StateKey::Full, prompt_probability: vec![0.5; 4] };
        assert!(p.validate().is_err());
        assert!(FrozenPolicy::constant(StateKey::User, 1.5).validate().is_err());
    }
}
