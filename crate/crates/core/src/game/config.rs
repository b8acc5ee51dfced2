use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{AgentParams, FrozenPolicy, RewardSpec};
use crate::kernels::{Dynamics, JointState, KernelSet, ObservationModel, TransitionModel};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Whether the user learns during the run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PolicyMode {
    #[default]
    QLearning,
    Frozen(FrozenPolicy),
}

/// Everything that defines a scenario. Serialised as the JSON config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub dynamics: Dynamics,
    pub observation: ObservationModel,
    pub kernels: KernelSet,
    pub reward: RewardSpec,
    pub agent: AgentParams,
    #[serde(default)]
    pub policy: PolicyMode,
    pub init_state: JointState,
    pub horizon: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replicas < 1 {
            return Err(Error::config("replicas must be at least 1"));
        }
        if self.horizon < 2 {
            return Err(Error::config("horizon must be at least 2"));
        }
        self.kernels.validate()?;
        self.reward.validate()?;
        self.agent.validate()?;
        if let PolicyMode::Frozen(p) = &self.policy {
            p.validate()?;
        }
        Ok(())
    }

    pub fn transition_model(&self) -> Result<TransitionModel> {
        TransitionModel::new(self.kernels, self.observation, self.dynamics)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Layer a (possibly partial) JSON document over this config.
    pub fn merged_with(&self, overlay: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overlay);
        Self::from_value(base)
    }

    /// Apply `path=value` overrides such as `agent.discount=0.5` or
    /// `kernels.user.m_o=-4`. The value is parsed as JSON, falling back to a
    /// plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        for raw in overrides {
            let raw = raw.as_ref();
            let (path, value) = raw
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override `{raw}` is not of the form key=value")))?;
            let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
            set_path(&mut doc, path.trim(), value)?;
        }
        Self::from_value(doc)
    }

    fn from_value(doc: Value) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_value(doc).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

// Missing leaves may be created (zero weights are not serialised); field names
// are then checked by `deny_unknown_fields` when the document is parsed back.
fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("malformed override key `{path}`")));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::config(format!("override key `{path}`: `{}` is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .get_mut(*part)
            .ok_or_else(|| Error::config(format!("unknown override key `{path}`")))?;
    }
    unreachable!("path has at least one component")
}
