//! Exact best response on a small enumerated MDP.
//!
//! The user's Markov decision problem over its observable key is solved with
//! value iteration on the Bellman optimality operator
//!
//! ```text
//! Q(k, a) = R(k, a) + β Σ_k' P(k' | k, a) V(k'),   V(k) = max_a Q(k, a)
//! ```
//!
//! Rewards are expected immediate rewards under the true kernels; values are in
//! the same undiscounted-sum units the Q-learner estimates.

use crate::agents::{compute_reward, RewardSpec, StateKey};
use crate::kernels::{observe, Dynamics, JointState, TransitionModel};
use crate::{Error, Result};

const ACTIONS: usize = 2;

/// Finite MDP with two actions. `transition[k][a][k']`, `reward[k][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    pub transition: Vec<[Vec<f64>; ACTIONS]>,
    pub reward: Vec<[f64; ACTIONS]>,
}

impl FiniteMdp {
    pub fn new(transition: Vec<[Vec<f64>; ACTIONS]>, reward: Vec<[f64; ACTIONS]>) -> Result<Self> {
        let n = transition.len();
        if n == 0 || reward.len() != n {
            return Err(Error::config("MDP needs matching, non-empty transition and reward tables"));
        }
        for (k, rows) in transition.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != n || row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!("transition row ({k}, {a}) is not a distribution")));
                }
            }
        }
        Ok(Self { transition, reward })
    }

    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    /// The user's decision problem over `key` under the scenario kernels.
    ///
    /// In user-focused dynamics the components hidden by the key are fresh
    /// uniform draws each step, so averaging over them is exact. Joint dynamics
    /// carry `m` and `e` forward and need the full key.
    pub fn from_model(model: &TransitionModel, reward: &RewardSpec, key: StateKey) -> Result<Self> {
        if model.dynamics == Dynamics::Joint && key != StateKey::Full {
            return Err(Error::config("joint dynamics are only Markov in the full (s, m, e) key"));
        }
        let n = key.size();
        let mut transition = vec![[vec![0.0; n], vec![0.0; n]]; n];
        let mut rewards = vec![[0.0; ACTIONS]; n];
        let mut members = vec![0usize; n];
        for state in JointState::all() {
            members[key.index(state)] += 1;
        }
        for state in JointState::all() {
            let k = key.index(state);
            let weight = 1.0 / members[k] as f64;
            for a in 0..ACTIONS {
                let r = a as u8;
                let o = observe(state.m, r, model.observation);
                let next = model.next_distribution(state, r);
                for (code, p) in next.iter().enumerate() {
                    let ns = JointState::from_code(code);
                    transition[k][a][key.index(ns)] += weight * p;
                    rewards[k][a] += weight * p * compute_reward(reward, state.s, r, state.m, o, ns.s);
                }
            }
        }
        // Renormalise away accumulated rounding.
        for rows in &mut transition {
            for row in rows.iter_mut() {
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Self::new(transition, rewards)
    }

    fn q_values(&self, values: &[f64], discount: f64) -> Vec<[f64; ACTIONS]> {
        (0..self.n_states())
            .map(|k| {
                let mut q = [0.0; ACTIONS];
                for (a, qa) in q.iter_mut().enumerate() {
                    let future: f64 = self.transition[k][a].iter().zip(values).map(|(p, v)| p * v).sum();
                    *qa = self.reward[k][a] + discount * future;
                }
                q
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    pub q_values: Vec<[f64; ACTIONS]>,
    /// Argmax action per state, ties to action 0.
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// Sup-norm change of the final sweep.
    pub residual: f64,
}

impl ValueIteration {
    /// All actions whose value is within `tol` of the best, per state.
    pub fn optimal_actions(&self, tol: f64) -> Vec<Vec<usize>> {
        self.q_values
            .iter()
            .map(|q| {
                let best = q[0].max(q[1]);
                (0..ACTIONS).filter(|&a| best - q[a] <= tol).collect()
            })
            .collect()
    }
}

const MAX_SWEEPS: usize = 1_000_000;

pub fn value_iteration(mdp: &FiniteMdp, discount: f64, tol: f64) -> Result<ValueIteration> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::config(format!("value iteration needs discount in [0, 1), got {discount}")));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tolerance must be positive"));
    }
    let mut values = vec![0.0; mdp.n_states()];
    for sweep in 1..=MAX_SWEEPS {
        let q = mdp.q_values(&values, discount);
        let next: Vec<f64> = q.iter().map(|row| row[0].max(row[1])).collect();
        let residual = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        if residual < tol {
            let q_values = mdp.q_values(&values, discount);
            let policy = q_values.iter().map(|row| if row[1] > row[0] { 1 } else { 0 }).collect();
            return Ok(ValueIteration { values, q_values, policy, iterations: sweep, residual });
        }
    }
    Err(Error::domain("value iteration did not converge"))
}

/// Exact value of a deterministic policy: solves `(I − βP_π) V = R_π`.
pub fn evaluate_policy(mdp: &FiniteMdp, policy: &[usize], discount: f64) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    if policy.len() != n || policy.iter().any(|&a| a >= ACTIONS) {
        return Err(Error::config("policy must assign an action in {0, 1} to every state"));
    }
    let mut a = vec![vec![0.0; n + 1]; n];
    for k in 0..n {
        let act = policy[k];
        for j in 0..n {
            a[k][j] = if k == j { 1.0 } else { 0.0 } - discount * mdp.transition[k][act][j];
        }
        a[k][n] = mdp.reward[k][act];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::domain("singular policy-evaluation system"));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for c in col..=n {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
    }
    Ok((0..n).map(|k| a[k][n] / a[k][k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain(reward_in_one: f64) -> FiniteMdp {
        // Both actions move deterministically to state 1; reward earned in state 1.
        let to_one = || vec![0.0, 1.0];
        FiniteMdp::new(
            vec![[to_one(), to_one()], [to_one(), to_one()]],
            vec![[0.0, 0.0], [reward_in_one, reward_in_one]],
        )
        .unwrap()
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let vi = value_iteration(&chain(0.0), 0.9, 1e-10).unwrap();
        assert!(vi.values.iter().all(|v| *v == 0.0));
        assert_eq!(vi.policy, vec![0, 0]);
    }

    #[test]
    fn geometric_series_value() {
        for beta in [0.0, 0.5, 0.9, 0.99] {
            let vi = value_iteration(&chain(1.0), beta, 1e-12).unwrap();
            assert_relative_eq!(vi.values[1], 1.0 / (1.0 - beta), epsilon = 1e-9);
            assert!(vi.residual < 1e-12);
        }
    }

    #[test]
    fn discount_out_of_range() {
        assert!(matches!(value_iteration(&chain(1.0), 1.0, 1e-10), Err(Error::Config(_))));
    }

    #[test]
    fn policy_evaluation_matches_closed_form() {
        let v = evaluate_policy(&chain(1.0), &[0, 1], 0.75).unwrap();
        assert_relative_eq!(v[1], 4.0, epsilon = 1e-12);
        assert_relative_eq!(v[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = FiniteMdp::new(vec![[vec![0.5], vec![1.0]]], vec![[0.0, 0.0]]);
        assert!(bad.is_err());
    }
}
