use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::agents::{FrozenPolicy, StateKey};
use crate::experiments::acceptance::check_figure;
use crate::experiments::aggregate::{
    aggregate, metrics_to_csv, oracle_to_csv, summaries_to_json, EstimationMode, DEFAULT_WINDOW,
};
use crate::experiments::figures::{run_figure, run_scenario, slug, write_file, Figure};
use crate::game::{preset, simulate_replica, trajectories_from_csv, trajectories_to_csv, PolicyMode, ScenarioConfig};
use crate::game::{UserAgent, PRESET_NAMES};
use crate::kernels::Dynamics;
use crate::infometrics::{exact_chain_metrics, Metric, SeriesOptions, StdConvention};
use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SYMBIOGAME_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "symbiogame", version, about = "User / machine / environment stochastic game with information metrics")]
struct Cli {
    /// Worker threads for replica fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectories, metrics and a summary.
    Run(RunArgs),
    /// Run a scenario once per point of a parameter sweep.
    Sweep(SweepArgs),
    /// Recompute metrics from a trajectory CSV.
    Metrics(MetricsArgs),
    /// Exact per-step metrics of a frozen-policy chain.
    Oracle(OracleArgs),
    /// Run the pinned pipeline behind one figure.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Preset to start from.
    #[arg(long)]
    preset: Option<String>,
    /// JSON config layered over the preset (or a complete config without one).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `path=value` override, e.g. `--set agent.discount=0.5`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimationArgs {
    /// Metric such as `H(s,m)`, `I(s';m)`, `I(s';m'|s,e,m)`, `TE(s->m)`. Repeatable.
    #[arg(long = "metric")]
    metrics: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Estimate across replicas at each timestep instead of per-run windows.
    #[arg(long)]
    ensemble: bool,
    /// Report the n-1 standard deviation instead of the population one.
    #[arg(long)]
    sample_std: bool,
    /// Add a pseudo-count to every cell (0.5 when given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pseudocount: Option<f64>,
}

impl EstimationArgs {
    fn metrics(&self, dynamics: Dynamics) -> Result<Vec<Metric>> {
        if self.metrics.is_empty() {
            let defaults: &[&str] = match dynamics {
                Dynamics::UserFocused => &["H(s,m)", "I(s';m)"],
                Dynamics::Joint => &["H(s,e,m)", "I(s';m'|s,e,m)"],
            };
            return defaults.iter().map(|m| m.parse()).collect();
        }
        self.metrics.iter().map(|m| m.parse()).collect()
    }

    fn mode(&self) -> EstimationMode {
        if self.ensemble {
            EstimationMode::Ensemble
        } else {
            EstimationMode::Windowed
        }
    }

    fn options(&self) -> Result<SeriesOptions> {
        if let Some(l) = self.pseudocount {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::config(format!("pseudocount must be positive, got {l}")));
            }
        }
        let std = if self.sample_std { StdConvention::Sample } else { StdConvention::Population };
        Ok(SeriesOptions { std, pseudocount: self.pseudocount })
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    estimation: EstimationArgs,
    /// Output directory (default `$SYMBIOGAME_OUT/<scenario>` or `out/<scenario>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every replica's final Q-table.
    #[arg(long)]
    dump_q: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    estimation: EstimationArgs,
    /// `path=v1,v2,...`, e.g. `kernels.user.m_o=-1,-2,-4`. Repeatable.
    #[arg(long = "param", value_name = "PATH=V1,V2,...", required = true)]
    params: Vec<String>,
    /// Take the cross product of all parameters instead of zipping them.
    #[arg(long)]
    cross: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Trajectory CSV written by `run`.
    #[arg(long)]
    trajectories: PathBuf,
    #[command(flatten)]
    estimation: EstimationArgs,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Frozen policy: `uniform` or a constant probability of prompting. When
    /// omitted the config must already carry a frozen policy.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long = "metric")]
    metrics: Vec<String>,
    /// Number of timesteps (default: the scenario horizon).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// One of 3a, 3b, 3c, 4, 5, 6.
    #[arg(long)]
    figure: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the figure's acceptance checks; exit 3 when one fails.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
}

/// A sweep over one or more config paths.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub params: Vec<(String, Vec<String>)>,
    pub cross: bool,
}

impl SweepSpec {
    pub fn parse(raw: &[String], cross: bool) -> Result<Self> {
        let mut params = Vec::new();
        for r in raw {
            let (path, values) =
                r.split_once('=').ok_or_else(|| Error::config(format!("sweep parameter `{r}` is not PATH=V1,V2,...")))?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(Error::config(format!("sweep parameter `{path}` has no values")));
            }
            params.push((path.trim().to_string(), values));
        }
        if params.is_empty() {
            return Err(Error::config("a sweep needs at least one parameter"));
        }
        if !cross && params.iter().any(|(_, v)| v.len() != params[0].1.len()) {
            return Err(Error::config("zipped sweep parameters need equal-length value lists (or pass --cross)"));
        }
        Ok(Self { params, cross })
    }

    /// One list of `path=value` overrides per sweep point.
    pub fn points(&self) -> Vec<Vec<String>> {
        if !self.cross {
            return (0..self.params[0].1.len())
                .map(|i| self.params.iter().map(|(p, v)| format!("{p}={}", v[i])).collect())
                .collect();
        }
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        for (p, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(format!("{p}={v}"));
                        next
                    })
                })
                .collect();
        }
        out
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn out_dir(explicit: &Option<PathBuf>, sub: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out_root().join(sub))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

/// Preset, then config file, then `--set`, then the dedicated flags.
fn resolve_scenario(a: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match (&a.preset, &a.config) {
        (Some(name), None) => preset(name)?,
        (Some(name), Some(path)) => preset(name)?.merged_with(&read_json(path)?)?,
        (None, Some(path)) => {
            let doc = read_json(path)?;
            serde_json::from_value::<ScenarioConfig>(doc).map_err(|e| Error::config(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(Error::config("give --preset, --config or both")),
    };
    cfg = cfg.with_overrides(&a.overrides)?;
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.replicas = a.replicas.unwrap_or(cfg.replicas);
    cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
    cfg.validate()?;
    Ok(cfg)
}

fn dump_q_tables(cfg: &ScenarioConfig) -> Result<String> {
    let mut out = format!("{}\nrun,key,action,value\n", crate::game::SCHEMA_LINE);
    for replica in 0..cfg.replicas {
        if let (_, UserAgent::Learner(q)) = simulate_replica(cfg, replica)? {
            for line in q.table().to_csv().lines().skip(1) {
                out.push_str(&format!("{replica},{line}\n"));
            }
        }
    }
    Ok(out)
}

fn run_one(cfg: &ScenarioConfig, est: &EstimationArgs, dir: &Path, dump_q: bool, jobs: usize) -> Result<()> {
    let metrics = est.metrics(cfg.dynamics)?;
    let run = run_scenario(cfg, &metrics, est.window.min(cfg.horizon), est.mode(), &est.options()?, jobs)?;
    fs::create_dir_all(dir)?;
    write_file(dir, "config.json", &cfg.to_json()?)?;
    write_file(dir, "trajectories.csv", &trajectories_to_csv(&run.artifact.trajectories))?;
    write_file(dir, "metrics.csv", &metrics_to_csv(&run.aggregate.series))?;
    write_file(dir, "summary.json", &summaries_to_json(&run.aggregate.summaries)?)?;
    write_file(dir, "run.json", &run.artifact.manifest_json()?)?;
    if dump_q {
        write_file(dir, "qtables.csv", &dump_q_tables(cfg)?)?;
    }
    println!("{}", dir.display());
    Ok(())
}

fn cmd_run(a: &RunArgs, jobs: usize) -> Result<i32> {
    let cfg = resolve_scenario(&a.scenario)?;
    run_one(&cfg, &a.estimation, &out_dir(&a.out, &slug(&cfg.name)), a.dump_q, jobs)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, jobs: usize) -> Result<i32> {
    let base = resolve_scenario(&a.scenario)?;
    let spec = SweepSpec::parse(&a.params, a.cross)?;
    let root = out_dir(&a.out, &format!("{}_sweep", slug(&base.name)));
    for (i, overrides) in spec.points().iter().enumerate() {
        let mut cfg = base.with_overrides(overrides)?;
        cfg.name = format!("{}[{}]", base.name, overrides.join(","));
        log::info!("sweep point {i}: {}", overrides.join(" "));
        run_one(&cfg, &a.estimation, &root.join(format!("point{i:03}")), false, jobs)?;
    }
    Ok(EXIT_OK)
}

fn cmd_metrics(a: &MetricsArgs) -> Result<i32> {
    let text = fs::read_to_string(&a.trajectories)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", a.trajectories.display())))?;
    let trajectories = trajectories_from_csv(&text)?;
    let horizon = trajectories[0].len();
    let mut window = a.estimation.window;
    if window > horizon {
        log::warn!("window {window} is longer than the {horizon}-step trajectories; using {horizon}");
        window = horizon;
    }
    let metrics = if a.estimation.metrics.is_empty() {
        vec!["H(s,m)".parse()?]
    } else {
        a.estimation.metrics(Dynamics::UserFocused)?
    };
    let name = a.trajectories.display().to_string();
    let agg = aggregate(&name, &trajectories, &metrics, window, a.estimation.mode(), &a.estimation.options()?)?;
    let csv = metrics_to_csv(&agg.series);
    match &a.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn parse_policy(raw: &str, key: StateKey) -> Result<FrozenPolicy> {
    if raw == "uniform" {
        return Ok(FrozenPolicy::uniform(key));
    }
    let p: f64 = raw
        .parse()
        .map_err(|_| Error::config(format!("policy must be `uniform` or a probability, got `{raw}`")))?;
    let policy = FrozenPolicy::constant(key, p);
    policy.validate()?;
    Ok(policy)
}

fn cmd_oracle(a: &OracleArgs) -> Result<i32> {
    let cfg = resolve_scenario(&a.scenario)?;
    let policy = match &a.policy {
        Some(raw) => PolicyMode::Frozen(parse_policy(raw, cfg.agent.key)?),
        None => cfg.policy.clone(),
    };
    let metrics: Vec<Metric> = if a.metrics.is_empty() {
        ["H(s,e,m)", "I(s;m)", "I(s';m'|s,e,m)", "TE(s->m)", "TE(m->s)"].iter().map(|m| m.parse()).collect::<Result<_>>()?
    } else {
        a.metrics.iter().map(|m| m.parse()).collect::<Result<_>>()?
    };
    let points = exact_chain_metrics(&cfg, &policy, &metrics, a.steps.unwrap_or(cfg.horizon))?;
    let csv = oracle_to_csv(&points);
    match &a.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_reproduce(a: &ReproduceArgs, jobs: usize) -> Result<i32> {
    let figure: Figure = a.figure.parse()?;
    let plan = figure.plan(a.seed)?.with_size(a.replicas, a.horizon);
    let started = Instant::now();
    let run = run_figure(&plan, jobs)?;
    let elapsed = started.elapsed();
    let dir = out_dir(&a.out, &format!("fig{}", figure.id()));
    run.write(&dir)?;
    println!("{}", dir.display());
    if !a.check {
        return Ok(EXIT_OK);
    }
    let outcomes = check_figure(&run, elapsed, jobs)?;
    for o in &outcomes {
        println!("{o}");
    }
    Ok(if outcomes.iter().all(|o| o.passed) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Domain(_) | Error::Io(_) => EXIT_FAILURE,
    }
}

/// Parse `args` (program name first) and execute. Returns the process exit code.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let jobs = cli.jobs.max(1);
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, jobs),
        Command::Sweep(a) => cmd_sweep(a, jobs),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Reproduce(a) => cmd_reproduce(a, jobs),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::Config(msg) = &err {
                if msg.contains("unknown preset") {
                    eprintln!("presets: {}", PRESET_NAMES.join(", "));
                }
            }
            exit_code(&err)
        }
    }
}

pub fn cli_main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    cli_run(std::env::args_os())
}
