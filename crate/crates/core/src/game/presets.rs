//! Named scenario presets.
//!
//! Weight mapping from the published table onto kernel features:
//!
//! | table  | kernel  | feature |
//! |--------|---------|---------|
//! | w_s    | user    | `s`     |
//! | w_a    | user    | `r_o`   |
//! | w_m    | user    | `m_o`   |
//! | w_e    | user    | `e`     |
//! | γ_s    | user    | `s_o`   |
//! | τ_m    | machine | `m`     |
//! | τ_a    | machine | `r`     |
//! | e_a    | env     | `r` (inactive unless `env_prompt_term`) |
//! | e_s    | env     | `s`     |
//! | e_e    | env     | `e`     |
//!
//! The joint-scenario user kernel keeps the gated `o·(w_a·r + w_m·m)` form so
//! the `w_m` column is consumed. Biases and the `γ_e`, `γ_m` interactions are 0.

use crate::agents::{AgentParams, QInit, RewardSpec, RewardVariant};
use crate::game::config::{PolicyMode, ScenarioConfig, SCHEMA_VERSION};
use crate::kernels::{Dynamics, JointState, KernelSet, KernelWeights, ObservationModel};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 9] = [
    "simple",
    "simple_biased",
    "simple_alpha2",
    "mi_sweep(<w_m>,<gamma_s>)",
    "hc",
    "lc",
    "hc_env",
    "hc_m",
    "parasite",
];

/// The `(w_m, γ_s)` grid of the user-dependence sweep.
pub const MI_SWEEP_GRID: [(f64, f64); 6] = [(-1.0, 1.0), (-1.0, 2.0), (-2.0, 1.0), (-2.0, 2.0), (-4.0, 1.0), (-4.0, 2.0)];

pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_REPLICAS: usize = 50;

fn base(name: &str, dynamics: Dynamics, kernels: KernelSet, reward: RewardSpec) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        dynamics,
        observation: ObservationModel::Machine,
        kernels,
        reward,
        agent: AgentParams::default(),
        policy: PolicyMode::QLearning,
        init_state: JointState::zero(),
        horizon: DEFAULT_HORIZON,
        replicas: DEFAULT_REPLICAS,
        seed: 0,
    }
}

fn user(ws: f64, wa: f64, wm: f64, we: f64) -> KernelWeights {
    KernelWeights { s: ws, r_o: wa, m_o: wm, e: we, ..Default::default() }
}

fn machine(tm: f64, ta: f64) -> KernelWeights {
    KernelWeights { m: tm, r: ta, ..Default::default() }
}

fn env(ea: f64, es: f64, ee: f64) -> KernelWeights {
    KernelWeights { r: ea, s: es, e: ee, ..Default::default() }
}

fn simple() -> ScenarioConfig {
    let kernels = KernelSet { user: user(2.0, 2.0, -1.0, 1.0), ..Default::default() };
    base("simple", Dynamics::UserFocused, kernels, RewardSpec::new(RewardVariant::IndicatorNextState, 1.0))
}

fn joint(name: &str, user: KernelWeights, machine: KernelWeights, env: KernelWeights) -> ScenarioConfig {
    let kernels = KernelSet { user, env, machine, env_prompt_term: false };
    base(name, Dynamics::Joint, kernels, RewardSpec::new(RewardVariant::JointQuadratic, 1.0))
}

const HC_USER: (f64, f64, f64, f64) = (1.5, 1.0, 6.0, 1.5);

fn hc_user() -> KernelWeights {
    let (ws, wa, wm, we) = HC_USER;
    user(ws, wa, wm, we)
}

pub fn mi_sweep(w_m: f64, gamma_s: f64) -> ScenarioConfig {
    let mut cfg = simple();
    cfg.name = format!("mi_sweep({w_m},{gamma_s})");
    cfg.kernels.user.m_o = w_m;
    cfg.kernels.user.s_o = gamma_s;
    cfg
}

/// Look up a preset by name. `mi_sweep(<w_m>,<gamma_s>)` takes its two
/// weights inline, e.g. `mi_sweep(-4,2)`.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "simple" => simple(),
        "simple_biased" => {
            let mut cfg = simple();
            cfg.name = name.into();
            cfg.agent.q_init = QInit::PerAction([5.0, 0.0]);
            cfg
        }
        "simple_alpha2" => {
            let mut cfg = simple();
            cfg.name = name.into();
            cfg.reward.alpha = 2.0;
            cfg
        }
        "hc" => joint(name, hc_user(), machine(0.0, 2.0), env(1.0, 1.0, 1.0)),
        "lc" => joint(name, user(0.2, 0.2, 0.1, 0.1), machine(0.0, 2.0), env(1.0, 1.0, 1.0)),
        "hc_env" => joint(name, hc_user(), machine(2.0, 0.0), env(4.0, 4.0, 2.0)),
        "hc_m" => joint(name, hc_user(), machine(2.0, 5.0), env(4.0, 4.0, 2.0)),
        "parasite" => {
            // HC with the machine's pull on the user switched off, a
            // self-driven user and a self-reinforcing machine.
            let mut cfg = joint(name, hc_user(), machine(5.0, 2.0), env(1.0, 1.0, 1.0));
            cfg.kernels.user.m_o = 0.1;
            cfg.kernels.user.s = -2.0;
            cfg
        }
        other => match parse_sweep(other) {
            Some((wm, gs)) => mi_sweep(wm, gs),
            None => {
                return Err(Error::config(format!(
                    "unknown preset `{other}`; valid presets: {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_sweep(name: &str) -> Option<(f64, f64)> {
    let inner = name.strip_prefix("mi_sweep(")?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Every concrete preset, with the sweep expanded.
pub fn all_presets() -> Vec<ScenarioConfig> {
    let mut out: Vec<_> = ["simple", "simple_biased", "simple_alpha2", "hc", "lc", "hc_env", "hc_m", "parasite"]
        .iter()
        .map(|n| preset(n).expect("built-in preset is valid"))
        .collect();
    out.extend(MI_SWEEP_GRID.iter().map(|&(wm, gs)| mi_sweep(wm, gs)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_weights() {
        assert_eq!(preset("hc").unwrap().kernels.user.m_o, 6.0);
        let p = preset("parasite").unwrap();
        assert_eq!(p.kernels.user.s, -2.0);
        assert_eq!(p.kernels.user.m_o, 0.1);
        assert_eq!(p.kernels.machine.m, 5.0);

        let hc_m = preset("hc_m").unwrap();
        assert_eq!((hc_m.kernels.machine.m, hc_m.kernels.machine.r), (2.0, 5.0));
        assert_eq!((hc_m.kernels.env.r, hc_m.kernels.env.s, hc_m.kernels.env.e), (4.0, 4.0, 2.0));
        let lc = preset("lc").unwrap();
        assert_eq!(lc.kernels.user, user(0.2, 0.2, 0.1, 0.1));
        assert_eq!(preset("simple_alpha2").unwrap().reward.alpha, 2.0);
        assert_eq!(preset("simple").unwrap().kernels.user, user(2.0, 2.0, -1.0, 1.0));
    }

    #[test]
    fn biased_preset_initial_q() {
        let cfg = preset("simple_biased").unwrap();
        assert_eq!(cfg.agent.q_init, QInit::PerAction([5.0, 0.0]));
    }

    #[test]
    fn sweep_parsing() {
        let cfg = preset("mi_sweep(-4,2)").unwrap();
        assert_eq!(cfg.kernels.user.m_o, -4.0);
        assert_eq!(cfg.kernels.user.s_o, 2.0);
        assert_eq!(cfg.name, "mi_sweep(-4,2)");
        assert!(preset("mi_sweep(-4)").is_err());
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = preset("nope").unwrap_err().to_string();
        assert!(err.contains("simple_biased") && err.contains("parasite"), "{err}");
    }

    #[test]
    fn presets_round_trip_byte_identical() {
        for cfg in all_presets() {
            let a = cfg.to_json().unwrap();
            let back = ScenarioConfig::from_json(&a).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json().unwrap(), a, "{}", cfg.name);
        }
    }
}
