//! Closed-form metrics for a frozen policy.
//!
//! With the user's policy held fixed the joint state is an 8-state Markov
//! chain. Every metric the estimators produce can then be computed from exact
//! one-step joints instead of samples.

use crate::agents::FrozenPolicy;
use crate::game::{PolicyMode, Record, ScenarioConfig};
use crate::infometrics::dist::EmpiricalDist;
use crate::infometrics::measures::Estimate;
use crate::infometrics::metric::Metric;
use crate::kernels::{observe, JointState, TransitionModel};
use crate::{Error, Result};

const N: usize = JointState::COUNT;

pub type StateDist = [f64; N];

#[derive(Debug, Clone)]
pub struct ExactChain {
    model: TransitionModel,
    /// `prompt[x][r]`
    prompt: [[f64; 2]; N],
    /// `kernel[x][r][x']`
    kernel: [[[f64; N]; 2]; N],
}

impl ExactChain {
    pub fn new(model: TransitionModel, policy: &FrozenPolicy) -> Result<Self> {
        policy.validate()?;
        let mut prompt = [[0.0; 2]; N];
        let mut kernel = [[[0.0; N]; 2]; N];
        for x in JointState::all() {
            let c = x.code();
            prompt[c] = policy.action_probabilities(x);
            for r in 0..2u8 {
                kernel[c][r as usize] = model.next_distribution(x, r);
            }
        }
        Ok(Self { model, prompt, kernel })
    }

    pub fn from_config(cfg: &ScenarioConfig, policy: &PolicyMode) -> Result<Self> {
        match policy {
            PolicyMode::Frozen(p) => Self::new(cfg.transition_model()?, p),
            PolicyMode::QLearning => {
                Err(Error::config("the exact chain needs a frozen policy; a learning user is not a Markov chain"))
            }
        }
    }

    /// Row-stochastic state-to-state matrix with the prompt marginalised out.
    pub fn matrix(&self) -> [[f64; N]; N] {
        let mut p = [[0.0; N]; N];
        for (x, row) in p.iter_mut().enumerate() {
            for r in 0..2 {
                for (y, cell) in row.iter_mut().enumerate() {
                    *cell += self.prompt[x][r] * self.kernel[x][r][y];
                }
            }
        }
        p
    }

    pub fn propagate(&self, p: &StateDist) -> StateDist {
        let m = self.matrix();
        let mut out = [0.0; N];
        for x in 0..N {
            for y in 0..N {
                out[y] += p[x] * m[x][y];
            }
        }
        out
    }

    /// State distributions for records `1..=steps`, starting from a point mass.
    pub fn marginals(&self, init: JointState, steps: usize) -> Vec<StateDist> {
        let mut p = [0.0; N];
        p[init.code()] = 1.0;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            out.push(p);
            p = self.propagate(&p);
        }
        out
    }

    /// Stationary distribution by solving πP = π with Σπ = 1.
    pub fn stationary(&self) -> Result<StateDist> {
        let m = self.matrix();
        // Rows 0..N-1 of (Pᵀ - I), last row replaced by the normalisation.
        let mut a = [[0.0; N + 1]; N];
        for (i, row) in a.iter_mut().enumerate() {
            for j in 0..N {
                row[j] = m[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        a[N - 1] = [1.0; N + 1];
        solve(&mut a).ok_or_else(|| Error::domain("transition matrix has no unique stationary distribution"))
    }

    /// Joint over [`Metric::vars`] when the current state has distribution `p`.
    pub fn joint(&self, metric: &Metric, p: &StateDist) -> Result<EmpiricalDist> {
        let mut d = self.accumulate(metric, p, metric.empty_distribution(), 1.0);
        normalise(&mut d)?;
        Ok(d)
    }

    /// Equal-weight mixture of the joints at each of `ps`: the population a
    /// pooled estimate over those timesteps samples from.
    pub fn mixture_joint(&self, metric: &Metric, ps: &[StateDist]) -> Result<EmpiricalDist> {
        if ps.is_empty() {
            return Err(Error::domain("empty mixture"));
        }
        let w = 1.0 / ps.len() as f64;
        let mut d = metric.empty_distribution();
        for p in ps {
            d = self.accumulate(metric, p, d, w);
        }
        normalise(&mut d)?;
        Ok(d)
    }

    pub fn metric(&self, metric: &Metric, p: &StateDist) -> Result<Estimate> {
        metric.evaluate(&self.joint(metric, p)?)
    }

    fn record(&self, x: usize, r: usize) -> Record {
        let state = JointState::from_code(x);
        let o = observe(state.m, r as u8, self.model.observation);
        Record { t: 0, state, r: r as u8, o, reward: 0.0 }
    }

    fn accumulate(&self, metric: &Metric, p: &StateDist, mut d: EmpiricalDist, weight: f64) -> EmpiricalDist {
        let vars = metric.vars();
        let mut buf = vec![0u8; vars.len()];
        let lagged = metric.is_lagged();
        for x in 0..N {
            if p[x] == 0.0 {
                continue;
            }
            for r in 0..2 {
                let w_now = weight * p[x] * self.prompt[x][r];
                if w_now == 0.0 {
                    continue;
                }
                let now = self.record(x, r);
                if !lagged {
                    for (slot, v) in buf.iter_mut().zip(&vars) {
                        *slot = v.read(&now, None);
                    }
                    let code = d.encode(&buf);
                    d.add_code(code, w_now);
                    continue;
                }
                for y in 0..N {
                    for r2 in 0..2 {
                        let w = w_now * self.kernel[x][r][y] * self.prompt[y][r2];
                        if w == 0.0 {
                            continue;
                        }
                        let next = self.record(y, r2);
                        for (slot, v) in buf.iter_mut().zip(&vars) {
                            *slot = v.read(&now, Some(&next));
                        }
                        let code = d.encode(&buf);
                        d.add_code(code, w);
                    }
                }
            }
        }
        d
    }
}

// Rounding leaves the mass a few ulps away from 1; rescale so the table is a
// distribution in the strict sense.
fn normalise(d: &mut EmpiricalDist) -> Result<()> {
    let total = d.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("exact joint has mass {total}")));
    }
    let probs = d.probabilities()?;
    *d = EmpiricalDist::from_probabilities(d.dims(), probs)?;
    Ok(())
}

fn solve(a: &mut [[f64; N + 1]; N]) -> Option<StateDist> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..N {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=N {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = a[i][N] / a[i][i];
    }
    Some(out)
}

/// Exact value of one metric at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPoint {
    pub metric: String,
    pub t: usize,
    pub exact: f64,
}

/// Propagate the chain from the configured initial state and evaluate every
/// metric at records `1..=steps`. Lagged metrics at `t` describe the
/// transition from record `t` to `t+1`.
pub fn exact_chain_metrics(
    cfg: &ScenarioConfig,
    policy: &PolicyMode,
    metrics: &[Metric],
    steps: usize,
) -> Result<Vec<ExactPoint>> {
    let chain = ExactChain::from_config(cfg, policy)?;
    let marginals = chain.marginals(cfg.init_state, steps);
    let mut out = Vec::with_capacity(metrics.len() * steps);
    for metric in metrics {
        let name = metric.to_string();
        for (i, p) in marginals.iter().enumerate() {
            out.push(ExactPoint { metric: name.clone(), t: i + 1, exact: chain.metric(metric, p)?.bits });
        }
    }
    Ok(out)
}
