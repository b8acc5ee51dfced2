use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernels::JointState;
use crate::{Error, Result};

/// Which part of the joint state the user conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKey {
    User,
    #[default]
    UserMachine,
    Full,
}

impl StateKey {
    pub fn size(self) -> usize {
        match self {
            StateKey::User => 2,
            StateKey::UserMachine => 4,
            StateKey::Full => 8,
        }
    }

    pub fn index(self, state: JointState) -> usize {
        match self {
            StateKey::User => state.s as usize,
            StateKey::UserMachine => (state.s as usize) << 1 | state.m as usize,
            StateKey::Full => state.code(),
        }
    }

    /// Human-readable key label, e.g. `s=1;m=0`.
    pub fn label(self, index: usize) -> String {
        match self {
            StateKey::User => format!("s={index}"),
            StateKey::UserMachine => format!("s={};m={}", index >> 1, index & 1),
            StateKey::Full => {
                let st = JointState::from_code(index);
                format!("s={};m={};e={}", st.s, st.m, st.e)
            }
        }
    }
}

/// Initial Q-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QInit {
    Uniform(f64),
    /// `[v(·, a=0), v(·, a=1)]` for every key.
    PerAction([f64; 2]),
}

impl Default for QInit {
    fn default() -> Self {
        QInit::Uniform(0.0)
    }
}

impl QInit {
    fn row(self) -> [f64; 2] {
        match self {
            QInit::Uniform(v) => [v, v],
            QInit::PerAction(row) => row,
        }
    }
}

fn default_temperature() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParams {
    pub learning_rate: f64,
    /// When set, the step size is annealed linearly from `learning_rate` to this
    /// value over the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_learning_rate: Option<f64>,
    pub discount: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub key: StateKey,
    #[serde(default)]
    pub q_init: QInit,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            final_learning_rate: None,
            discount: 0.9,
            temperature: 1.0,
            key: StateKey::UserMachine,
            q_init: QInit::default(),
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = |x: f64| x > 0.0 && x <= 1.0;
        if !lr_ok(self.learning_rate) {
            return Err(Error::config(format!("learning_rate must be in (0, 1], got {}", self.learning_rate)));
        }
        if let Some(f) = self.final_learning_rate {
            if !lr_ok(f) {
                return Err(Error::config(format!("final_learning_rate must be in (0, 1], got {f}")));
            }
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config(format!("discount must be in [0, 1), got {}", self.discount)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if self.q_init.row().iter().any(|v| !v.is_finite()) {
            return Err(Error::config("q_init values must be finite"));
        }
        Ok(())
    }

    /// Step size used at step `t` (1-based) of a `horizon`-step run.
    pub fn learning_rate_at(&self, t: usize, horizon: usize) -> f64 {
        match self.final_learning_rate {
            None => self.learning_rate,
            Some(end) if horizon > 1 => {
                let frac = (t.saturating_sub(1)) as f64 / (horizon - 1) as f64;
                self.learning_rate + (end - self.learning_rate) * frac.min(1.0)
            }
            Some(_) => self.learning_rate,
        }
    }
}

/// Q-values for every `(key, action)` pair; all cells exist from construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    key: StateKey,
    values: Vec<[f64; 2]>,
}

impl QTable {
    pub fn new(key: StateKey, init: QInit) -> Self {
        Self { key, values: vec![init.row(); key.size()] }
    }

    pub fn key(&self) -> StateKey {
        self.key
    }

    pub fn row(&self, index: usize) -> [f64; 2] {
        self.values[index]
    }

    pub fn row_for(&self, state: JointState) -> [f64; 2] {
        self.values[self.key.index(state)]
    }

    pub fn set(&mut self, index: usize, action: usize, value: f64) {
        self.values[index][action] = value;
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Greedy action per key, ties to action 0.
    pub fn greedy_policy(&self) -> Vec<usize> {
        self.values.iter().map(|row| if row[1] > row[0] { 1 } else { 0 }).collect()
    }

    /// CSV dump with header `key,action,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,action,value\n");
        for (i, row) in self.values.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                out.push_str(&format!("{},{a},{v}\n", self.key.label(i)));
            }
        }
        out
    }
}

/// Boltzmann probabilities `exp(q/τ) / Σ exp(q/τ)`, shifted by the row max.
pub fn softmax_probabilities(q_row: &[f64], temperature: f64) -> Vec<f64> {
    let max = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = q_row.iter().map(|q| ((q - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Sample an action from the softmax over `q_row` with a single uniform draw.
pub fn softmax_select<R: Rng + ?Sized>(q_row: &[f64], temperature: f64, rng: &mut R) -> (usize, Vec<f64>) {
    let probs = softmax_probabilities(q_row, temperature);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = a;
            break;
        }
    }
    (chosen, probs)
}

/// `Q(k,a) += η·(reward + β·max_b Q(k',b) − Q(k,a))`. Touches one cell.
pub fn q_update(
    table: &mut QTable,
    key: usize,
    action: usize,
    reward: f64,
    next_key: usize,
    learning_rate: f64,
    discount: f64,
) {
    let next = table.values[next_key];
    let target = reward + discount * next[0].max(next[1]);
    let cell = &mut table.values[key][action];
    *cell += learning_rate * (target - *cell);
}

/// One entry of the policy trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyStep {
    pub probabilities: [f64; 2],
    pub action: u8,
}

/// Softmax Q-learning user.
#[derive(Debug, Clone)]
pub struct QLearner {
    params: AgentParams,
    table: QTable,
}

impl QLearner {
    pub fn new(params: AgentParams) -> Self {
        Self { table: QTable::new(params.key, params.q_init), params }
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn select<R: Rng + ?Sized>(&self, state: JointState, rng: &mut R) -> PolicyStep {
        let row = self.table.row_for(state);
        let (action, probs) = softmax_select(&row, self.params.temperature, rng);
        PolicyStep { probabilities: [probs[0], probs[1]], action: action as u8 }
    }

    pub fn learn(&mut self, state: JointState, action: u8, reward: f64, next: JointState, learning_rate: f64) {
        let key = self.params.key;
        q_update(
            &mut self.table,
            key.index(state),
            action as usize,
            reward,
            key.index(next),
            learning_rate,
            self.params.discount,
        );
    }
}
