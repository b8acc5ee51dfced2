//! Logistic transition kernels over the binary joint state `(s, m, e)`.
//!
//! All three kernels (user, environment, machine) share one representation: a
//! bias plus a coefficient per named feature, pushed through a sigmoid. The
//! feature set is the union of everything the user-focused and joint kernels
//! reference:
//!
//! ```text
//! user     p(s'=1) = σ(ω0 + ωs·s + o·(ωa·r + ωm·m) + ωe·e + γs·s·o)
//! env      p(e'=1) = σ(ε0 + εs·s + εe·e + γe·s·e [+ εa·r])
//! machine  p(m'=1) = σ(τ0 + τm·m + τr·r + γm·m·r)
//! ```
//!
//! Each kernel only accepts the features above (plus a plain `o` term for the
//! user kernel, which covers the reduced joint-scenario form); anything else is
//! rejected at validation time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::bernoulli;
use crate::{Error, Result};

/// Largest probability a kernel will emit. Keeps every kernel output strictly
/// inside (0, 1) even when the logistic rounds to 1.0 in f64.
const P_MAX: f64 = 1.0 - f64::EPSILON / 2.0;
const P_MIN: f64 = f64::MIN_POSITIVE;

/// One timestep of the game: user knowledge `s`, machine state `m`,
/// environment state `e`. Every field is 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct JointState {
    pub s: u8,
    pub m: u8,
    pub e: u8,
}

#[derive(Deserialize)]
struct RawState {
    s: u8,
    m: u8,
    e: u8,
}

impl TryFrom<RawState> for JointState {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        JointState::new(raw.s, raw.m, raw.e)
    }
}

impl JointState {
    /// Number of distinct joint states.
    pub const COUNT: usize = 8;

    pub fn new(s: u8, m: u8, e: u8) -> Result<Self> {
        if s > 1 || m > 1 || e > 1 {
            return Err(Error::domain(format!("joint state components must be 0 or 1, got ({s}, {m}, {e})")));
        }
        Ok(Self { s, m, e })
    }

    pub const fn zero() -> Self {
        Self { s: 0, m: 0, e: 0 }
    }

    /// Fixed-width encoding `4s + 2m + e`.
    pub const fn code(self) -> usize {
        (self.s as usize) << 2 | (self.m as usize) << 1 | self.e as usize
    }

    pub const fn from_code(code: usize) -> Self {
        Self {
            s: ((code >> 2) & 1) as u8,
            m: ((code >> 1) & 1) as u8,
            e: (code & 1) as u8,
        }
    }

    pub fn all() -> impl Iterator<Item = JointState> {
        (0..Self::COUNT).map(Self::from_code)
    }
}

/// Named kernel inputs. Products are interaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    S,
    R,
    M,
    E,
    O,
    RO,
    MO,
    SO,
    SE,
    MR,
}

impl Feature {
    pub const ALL: [Feature; 10] = [
        Feature::S,
        Feature::R,
        Feature::M,
        Feature::E,
        Feature::O,
        Feature::RO,
        Feature::MO,
        Feature::SO,
        Feature::SE,
        Feature::MR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::S => "s",
            Feature::R => "r",
            Feature::M => "m",
            Feature::E => "e",
            Feature::O => "o",
            Feature::RO => "r_o",
            Feature::MO => "m_o",
            Feature::SO => "s_o",
            Feature::SE => "s_e",
            Feature::MR => "m_r",
        }
    }

    const fn index(self) -> usize {
        self as usize
    }
}

/// The evaluated feature vector for one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFeatures([f64; 10]);

impl TransitionFeatures {
    pub fn new(s: u8, r: u8, m: u8, e: u8, o: u8) -> Self {
        let (s, r, m, e, o) = (s as f64, r as f64, m as f64, e as f64, o as f64);
        Self([s, r, m, e, o, r * o, m * o, s * o, s * e, m * r])
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Bias plus per-feature logit coefficients. Omitted coefficients are 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelWeights {
    #[serde(skip_serializing_if = "is_zero")]
    pub bias: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub s: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub r: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub m: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub e: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub o: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub r_o: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub m_o: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub s_o: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub s_e: f64,
    #[serde(skip_serializing_if = "is_zero")]
    pub m_r: f64,
}

impl KernelWeights {
    pub fn coefficient(&self, feature: Feature) -> f64 {
        match feature {
            Feature::S => self.s,
            Feature::R => self.r,
            Feature::M => self.m,
            Feature::E => self.e,
            Feature::O => self.o,
            Feature::RO => self.r_o,
            Feature::MO => self.m_o,
            Feature::SO => self.s_o,
            Feature::SE => self.s_e,
            Feature::MR => self.m_r,
        }
    }

    /// Bias plus the weighted feature sum.
    pub fn logit(&self, features: &TransitionFeatures) -> f64 {
        Feature::ALL
            .iter()
            .fold(self.bias, |acc, &f| acc + self.coefficient(f) * features.get(f))
    }

    /// Every coefficient must be finite and only `allowed` features may be non-zero.
    pub fn validate(&self, kernel: &str, allowed: &[Feature]) -> Result<()> {
        if !self.bias.is_finite() {
            return Err(Error::config(format!("{kernel} kernel: bias is not finite")));
        }
        for f in Feature::ALL {
            let c = self.coefficient(f);
            if !c.is_finite() {
                return Err(Error::config(format!("{kernel} kernel: coefficient `{}` is not finite", f.name())));
            }
            if c != 0.0 && !allowed.contains(&f) {
                let names: Vec<_> = allowed.iter().map(|f| f.name()).collect();
                return Err(Error::config(format!(
                    "{kernel} kernel does not use feature `{}` (accepted: bias, {})",
                    f.name(),
                    names.join(", ")
                )));
            }
        }
        Ok(())
    }
}

pub const USER_FEATURES: [Feature; 6] = [Feature::S, Feature::E, Feature::O, Feature::RO, Feature::MO, Feature::SO];
pub const ENV_FEATURES: [Feature; 4] = [Feature::S, Feature::E, Feature::SE, Feature::R];
pub const MACHINE_FEATURES: [Feature; 3] = [Feature::M, Feature::R, Feature::MR];

/// Weights for all three kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSet {
    pub user: KernelWeights,
    #[serde(default)]
    pub env: KernelWeights,
    #[serde(default)]
    pub machine: KernelWeights,
    /// Enables the `εa·r` term of the environment kernel. The weight is kept in
    /// `env.r` either way.
    #[serde(default)]
    pub env_prompt_term: bool,
}

impl KernelSet {
    pub fn validate(&self) -> Result<()> {
        self.user.validate("user", &USER_FEATURES)?;
        self.env.validate("env", &ENV_FEATURES)?;
        self.machine.validate("machine", &MACHINE_FEATURES)
    }
}

/// How the machine's reply `o` is formed from machine state and prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationModel {
    /// Reply quality mirrors the machine state.
    #[default]
    Machine,
    /// A good reply needs both a good machine and an informative prompt.
    MachineTimesPrompt,
}

/// How `m` and `e` evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Machine and environment are drawn fresh and uniformly every step.
    #[default]
    UserFocused,
    /// Machine and environment follow their logistic kernels.
    Joint,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("sigmoid of non-finite value {x}")));
    }
    Ok(sigmoid_unchecked(x))
}

#[inline]
fn sigmoid_unchecked(x: f64) -> f64 {
    let p = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    };
    p.clamp(P_MIN, P_MAX)
}

pub fn observe(m: u8, r: u8, model: ObservationModel) -> u8 {
    match model {
        ObservationModel::Machine => m,
        ObservationModel::MachineTimesPrompt => m & r,
    }
}

pub fn user_logit(s: u8, r: u8, m: u8, e: u8, o: u8, w: &KernelWeights) -> f64 {
    w.logit(&TransitionFeatures::new(s, r, m, e, o))
}

/// The `εa·r` term only contributes when `prompt_term` is set.
pub fn env_logit(s: u8, e: u8, r: u8, w: &KernelWeights, prompt_term: bool) -> f64 {
    let r = if prompt_term { r } else { 0 };
    w.logit(&TransitionFeatures::new(s, r, 0, e, 0))
}

pub fn machine_logit(m: u8, r: u8, w: &KernelWeights) -> f64 {
    w.logit(&TransitionFeatures::new(0, r, m, 0, 0))
}

/// Kernels plus the observation and dynamics choices: everything needed to
/// move the joint state forward given the user's prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionModel {
    pub kernels: KernelSet,
    pub observation: ObservationModel,
    pub dynamics: Dynamics,
}

impl TransitionModel {
    pub fn new(kernels: KernelSet, observation: ObservationModel, dynamics: Dynamics) -> Result<Self> {
        kernels.validate()?;
        Ok(Self { kernels, observation, dynamics })
    }

    /// `[P(s'=1), P(m'=1), P(e'=1)]` for the given state and prompt.
    pub fn next_probabilities(&self, state: JointState, r: u8) -> [f64; 3] {
        let JointState { s, m, e } = state;
        let o = observe(m, r, self.observation);
        let k = &self.kernels;
        let ps = sigmoid_unchecked(user_logit(s, r, m, e, o, &k.user));
        match self.dynamics {
            Dynamics::UserFocused => [ps, 0.5, 0.5],
            Dynamics::Joint => [
                ps,
                sigmoid_unchecked(machine_logit(m, r, &k.machine)),
                sigmoid_unchecked(env_logit(s, e, r, &k.env, k.env_prompt_term)),
            ],
        }
    }

    /// Exact distribution over the 8 next states, indexed by [`JointState::code`].
    pub fn next_distribution(&self, state: JointState, r: u8) -> [f64; JointState::COUNT] {
        let [ps, pm, pe] = self.next_probabilities(state, r);
        let mut out = [0.0; JointState::COUNT];
        for next in JointState::all() {
            let f = |bit: u8, p: f64| if bit == 1 { p } else { 1.0 - p };
            out[next.code()] = f(next.s, ps) * f(next.m, pm) * f(next.e, pe);
        }
        out
    }

    /// Draw the next state; components are sampled independently in the order s, m, e.
    pub fn sample_next<R: Rng + ?Sized>(&self, state: JointState, r: u8, rng: &mut R) -> JointState {
        let [ps, pm, pe] = self.next_probabilities(state, r);
        let s = bernoulli(rng, ps) as u8;
        let m = bernoulli(rng, pm) as u8;
        let e = bernoulli(rng, pe) as u8;
        JointState { s, m, e }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn simple_user() -> KernelWeights {
        KernelWeights { s: 2.0, r_o: 2.0, m_o: -1.0, e: 1.0, ..Default::default() }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0).unwrap(), 0.5);
        assert!((1.0 - sigmoid(50.0).unwrap()) < 1e-9);
        assert!(sigmoid(50.0).unwrap() < 1.0);
        assert!(sigmoid(-800.0).unwrap() > 0.0);
        assert!(sigmoid(f64::NAN).is_err());
        assert!(sigmoid(f64::INFINITY).is_err());
    }

    #[test]
    fn sigmoid_of_simple_full_logit() {
        // logit 2 + 2 - 1 + 1 = 4 with γs = 0. Reference from a 50-digit evaluation.
        let logit = user_logit(1, 1, 1, 1, 1, &simple_user());
        assert_eq!(logit, 4.0);
        assert_relative_eq!(sigmoid(logit).unwrap(), 0.982_013_790_037_908_4, epsilon = 1e-15);
        let with_gamma = KernelWeights { s_o: 1.0, ..simple_user() };
        assert_relative_eq!(
            sigmoid(user_logit(1, 1, 1, 1, 1, &with_gamma)).unwrap(),
            0.993_307_149_075_715_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn observation_models() {
        assert_eq!(observe(1, 0, ObservationModel::Machine), 1);
        assert_eq!(observe(0, 1, ObservationModel::Machine), 0);
        assert_eq!(observe(1, 1, ObservationModel::MachineTimesPrompt), 1);
        assert_eq!(observe(1, 0, ObservationModel::MachineTimesPrompt), 0);
    }

    #[test]
    fn user_logit_cases() {
        assert_eq!(user_logit(0, 0, 0, 0, 0, &KernelWeights::default()), 0.0);
        let w = KernelWeights { bias: 0.3, ..simple_user() };
        for r in 0..2 {
            for m in 0..2 {
                assert_eq!(user_logit(1, r, m, 1, 0, &w), 0.3 + 2.0 + 1.0);
            }
        }
    }

    #[test]
    fn env_and_machine_logits() {
        let hc_m_machine = KernelWeights { m: 2.0, r: 5.0, ..Default::default() };
        assert_eq!(machine_logit(1, 0, &hc_m_machine), 2.0);
        assert_eq!(machine_logit(1, 1, &hc_m_machine), 7.0);

        let hc_env = KernelWeights { r: 4.0, s: 4.0, e: 2.0, ..Default::default() };
        assert_eq!(env_logit(0, 0, 1, &KernelWeights::default(), false), 0.0);
        assert_eq!(env_logit(1, 1, 1, &hc_env, false), 6.0);
        assert_eq!(env_logit(1, 1, 1, &hc_env, true), 10.0);
    }

    #[test]
    fn validation_rejects_foreign_features() {
        let env = KernelWeights { m: 1.0, ..Default::default() };
        let set = KernelSet { user: simple_user(), env, ..Default::default() };
        let err = set.validate().unwrap_err().to_string();
        assert!(err.contains("`m`"), "{err}");

        let bad = KernelSet { user: KernelWeights { s: f64::NAN, ..Default::default() }, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn weights_reject_unknown_json_keys() {
        let ok: KernelWeights = serde_json::from_str(r#"{"s": 2.0, "r_o": 2.0}"#).unwrap();
        assert_eq!(ok.s, 2.0);
        assert_eq!(ok.m_o, 0.0);
        assert!(serde_json::from_str::<KernelWeights>(r#"{"w_s": 2.0}"#).is_err());
        assert!(serde_json::from_str::<JointState>(r#"{"s": 2, "m": 0, "e": 0}"#).is_err());
    }

    #[test]
    fn saturated_kernels_hit_all_ones() {
        let k = KernelSet {
            user: KernelWeights { bias: 50.0, ..Default::default() },
            env: KernelWeights { bias: 50.0, ..Default::default() },
            machine: KernelWeights { bias: 50.0, ..Default::default() },
            env_prompt_term: false,
        };
        let model = TransitionModel::new(k, ObservationModel::Machine, Dynamics::Joint).unwrap();
        let dist = model.next_distribution(JointState::zero(), 0);
        assert!(dist[JointState { s: 1, m: 1, e: 1 }.code()] >= 1.0 - 1e-9);
    }

    fn joint_model() -> TransitionModel {
        let k = KernelSet {
            user: simple_user(),
            env: KernelWeights { s: 1.0, e: 1.0, ..Default::default() },
            machine: KernelWeights { r: 2.0, ..Default::default() },
            env_prompt_term: false,
        };
        TransitionModel::new(k, ObservationModel::Machine, Dynamics::Joint).unwrap()
    }

    #[test]
    fn next_distribution_from_origin_by_enumeration() {
        // From (0,0,0) with r = 1: user logit 0, machine logit 2, env logit 0.
        let model = joint_model();
        let dist = model.next_distribution(JointState::zero(), 1);
        let pm = 1.0 / (1.0 + (-2.0f64).exp());
        for next in JointState::all() {
            let ps = 0.5;
            let pe = 0.5;
            let want = ps * if next.m == 1 { pm } else { 1.0 - pm } * pe;
            assert_relative_eq!(dist[next.code()], want, epsilon = 1e-15);
        }
        assert_relative_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sampled_joint_factorises() {
        // Chi-square of 10^5 draws against the product of the component Bernoullis.
        let model = joint_model();
        let state = JointState { s: 1, m: 1, e: 0 };
        let expected = model.next_distribution(state, 0);
        let mut rng = replica_stream(11, 0);
        let n = 100_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            counts[model.sample_next(state, 0, &mut rng).code()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&c, p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 7 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn user_focused_ignores_machine_kernels() {
        let mut model = joint_model();
        model.dynamics = Dynamics::UserFocused;
        let p = model.next_probabilities(JointState { s: 1, m: 1, e: 1 }, 1);
        assert_eq!(p[1], 0.5);
        assert_eq!(p[2], 0.5);
    }

    proptest! {
        #[test]
        fn sigmoid_symmetric_and_monotone(x in -30.0f64..30.0, d in 0.0f64..5.0) {
            let a = sigmoid(x).unwrap();
            prop_assert!(a > 0.0 && a < 1.0);
            prop_assert!((sigmoid(-x).unwrap() - (1.0 - a)).abs() < 1e-15);
            prop_assert!(sigmoid(x + d).unwrap() >= a);
        }

        #[test]
        fn kernel_outputs_strictly_inside_unit_interval(
            bias in -60.0f64..60.0, s in -10.0f64..10.0, m_o in -10.0f64..10.0,
            tm in -60.0f64..60.0, code in 0usize..8, r in 0u8..2,
        ) {
            let k = KernelSet {
                user: KernelWeights { bias, s, m_o, ..Default::default() },
                env: KernelWeights { bias, s, ..Default::default() },
                machine: KernelWeights { m: tm, ..Default::default() },
                env_prompt_term: false,
            };
            let model = TransitionModel::new(k, ObservationModel::MachineTimesPrompt, Dynamics::Joint).unwrap();
            for p in model.next_probabilities(JointState::from_code(code), r) {
                prop_assert!(p > 0.0 && p < 1.0);
            }
        }

        #[test]
        fn prompt_is_irrelevant_when_reply_is_empty(s in 0u8..2, e in 0u8..2, w in -5.0f64..5.0) {
            // Under o = m with m = 0 the gated terms vanish, so r changes nothing.
            let weights = KernelWeights { s: w, r_o: 3.0, m_o: -2.0, e: 1.0, s_o: 0.5, ..Default::default() };
            let o = observe(0, 1, ObservationModel::Machine);
            prop_assert_eq!(user_logit(s, 1, 0, e, o, &weights), user_logit(s, 0, 0, e, o, &weights));
            // Under o = m·r with r = 0 the machine state is invisible too.
            let o = observe(1, 0, ObservationModel::MachineTimesPrompt);
            prop_assert_eq!(user_logit(s, 0, 1, e, o, &weights), user_logit(s, 0, 0, e, o, &weights));
        }
    }
}
