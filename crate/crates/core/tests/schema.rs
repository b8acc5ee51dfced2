use std::path::PathBuf;

use symbiogame::agents::{FrozenPolicy, StateKey};
use symbiogame::game::{mi_sweep, preset, PolicyMode, ScenarioConfig, MI_SWEEP_GRID};

fn validator() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/scenario.schema.json");
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    jsonschema::draft202012::new(&schema).expect("schema compiles")
}

fn assert_conforms(v: &jsonschema::Validator, cfg: &ScenarioConfig) {
    let doc: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", cfg.name);
}

#[test]
fn every_preset_conforms() {
    let v = validator();
    for name in ["simple", "simple_biased", "simple_alpha2", "hc", "lc", "hc_env", "hc_m", "parasite"] {
        assert_conforms(&v, &preset(name).unwrap());
    }
    for (w_m, gamma_s) in MI_SWEEP_GRID {
        assert_conforms(&v, &mi_sweep(w_m, gamma_s));
    }
}

#[test]
fn frozen_policy_and_schedule_conform() {
    let v = validator();
    let mut cfg = preset("lc").unwrap();
    cfg.policy = PolicyMode::Frozen(FrozenPolicy::uniform(StateKey::UserMachine));
    cfg.agent.final_learning_rate = Some(0.05);
    assert_conforms(&v, &cfg);
}

#[test]
fn schema_rejects_what_the_loader_rejects() {
    let v = validator();
    let base: serde_json::Value = serde_json::from_str(&preset("hc").unwrap().to_json().unwrap()).unwrap();
    let mut bad = Vec::new();
    let mut doc = base.clone();
    doc["kernels"]["machine"]["s_o"] = 1.0.into();
    bad.push(doc);
    let mut doc = base.clone();
    doc["dynamics"] = "frozen".into();
    bad.push(doc);
    let mut doc = base.clone();
    doc["agent"]["nope"] = 1.into();
    bad.push(doc);
    let mut doc = base;
    doc["init_state"]["s"] = 2.into();
    bad.push(doc);
    for doc in bad {
        assert!(!v.is_valid(&doc), "schema accepted {doc}");
        assert!(ScenarioConfig::from_json(&doc.to_string()).is_err(), "loader accepted {doc}");
    }
}
