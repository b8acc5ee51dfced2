use symbiogame::agents::{evaluate_policy, value_iteration, FiniteMdp, FrozenPolicy, StateKey};
use symbiogame::game::{preset, run_replica, PolicyMode, ScenarioConfig};
use symbiogame::infometrics::{ExactChain, Metric};
use symbiogame::kernels::JointState;

fn frozen(name: &str, horizon: usize) -> (ScenarioConfig, ExactChain) {
    let policy = FrozenPolicy::uniform(StateKey::UserMachine);
    let cfg = ScenarioConfig {
        horizon,
        replicas: 1,
        seed: 42,
        policy: PolicyMode::Frozen(policy.clone()),
        ..preset(name).unwrap()
    };
    let chain = ExactChain::new(cfg.transition_model().unwrap(), &policy).unwrap();
    (cfg, chain)
}

#[test]
fn value_iteration_beats_every_deterministic_policy() {
    let cfg = preset("simple").unwrap();
    let model = cfg.transition_model().unwrap();
    let mdp = FiniteMdp::from_model(&model, &cfg.reward, cfg.agent.key).unwrap();
    let beta = cfg.agent.discount;
    let vi = value_iteration(&mdp, beta, 1e-13).unwrap();
    let n = mdp.n_states();

    let mut best = vec![f64::NEG_INFINITY; n];
    for bits in 0..(1u32 << n) {
        let policy: Vec<usize> = (0..n).map(|k| ((bits >> k) & 1) as usize).collect();
        let v = evaluate_policy(&mdp, &policy, beta).unwrap();
        for k in 0..n {
            assert!(v[k] <= vi.values[k] + 1e-9, "policy {policy:?} beats value iteration in state {k}");
            best[k] = best[k].max(v[k]);
        }
    }
    for k in 0..n {
        assert!((best[k] - vi.values[k]).abs() < 1e-9);
    }

    // Prompting is optimal everywhere; it is strictly better once the reply
    // carries the machine's state (m = 1) and irrelevant otherwise.
    let optimal = vi.optimal_actions(1e-9);
    for s in 0..2u8 {
        for m in 0..2u8 {
            let k = cfg.agent.key.index(JointState { s, m, e: 0 });
            assert!(optimal[k].contains(&1), "s={s} m={m}: {:?}", optimal[k]);
            if m == 1 {
                assert_eq!(optimal[k], vec![1]);
            } else {
                assert_eq!(optimal[k], vec![0, 1]);
            }
        }
    }
    let always_prompt = evaluate_policy(&mdp, &vec![1; n], beta).unwrap();
    for k in 0..n {
        assert!((always_prompt[k] - vi.values[k]).abs() < 1e-9);
    }
}

#[test]
fn simulated_user_marginal_matches_stationary_distribution() {
    let (cfg, chain) = frozen("simple", 200_000);
    let pi = chain.stationary().unwrap();
    let exact: f64 = JointState::all().filter(|x| x.s == 1).map(|x| pi[x.code()]).sum();
    let traj = run_replica(&cfg, 0).unwrap();
    let empirical = traj.records.iter().filter(|r| r.state.s == 1).count() as f64 / traj.len() as f64;
    assert!((exact - empirical).abs() < 0.01, "{exact} vs {empirical}");
}

fn long_run_vs_stationary(name: &str, metric: &str, tol: f64) {
    let (cfg, chain) = frozen(name, 200_001);
    let metric: Metric = metric.parse().unwrap();
    let pi = chain.stationary().unwrap();
    let exact = chain.metric(&metric, &pi).unwrap();
    let traj = run_replica(&cfg, 0).unwrap();
    let estimate = metric.estimate(&traj.records).unwrap();
    assert!(
        (exact.bits - estimate.bits).abs() < tol,
        "{name} {metric}: exact {} vs plug-in {}",
        exact.bits,
        estimate.bits
    );
    assert!(exact.identity_residual < 1e-9 && estimate.identity_residual < 1e-9);
}

#[test]
fn lagged_cmi_on_lc_chain() {
    long_run_vs_stationary("lc", "I(s';m'|s,e,m)", 0.005);
    long_run_vs_stationary("lc", "I(s';m)", 0.005);
}

#[test]
fn transfer_entropy_on_parasite_chain() {
    long_run_vs_stationary("parasite", "TE(s->m)", 0.005);
    long_run_vs_stationary("parasite", "TE(m->s)", 0.005);
    long_run_vs_stationary("parasite", "H(s,e,m)", 0.02);
}

#[test]
fn exact_per_step_metrics_start_from_a_point_mass() {
    let (cfg, chain) = frozen("hc", 50);
    let pts = chain.marginals(cfg.init_state, 50);
    assert_eq!(pts[0][cfg.init_state.code()], 1.0);
    let h: Metric = "H(s,e,m)".parse().unwrap();
    assert_eq!(chain.metric(&h, &pts[0]).unwrap().bits, 0.0);
    assert!(chain.metric(&h, &pts[1]).unwrap().bits > 0.5);
    for p in &pts {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
