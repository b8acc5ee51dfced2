//! Pinned pipelines, one per published figure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::experiments::aggregate::{
    aggregate, metrics_to_csv, summaries_to_json, Aggregate, EstimationMode, SeriesSummary, DEFAULT_WINDOW,
};
use crate::game::{mi_sweep, preset, trajectories_to_csv, RunArtifact, RunMetadata, ScenarioConfig, MI_SWEEP_GRID};
use crate::infometrics::{Metric, SeriesOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    /// System entropy of the user-focused game.
    UserEntropy,
    /// Same, with a biased initial Q-table.
    BiasedPrior,
    /// Same, with a larger reward weight.
    HighReward,
    /// User/machine dependence across user-kernel weights.
    DependenceSweep,
    /// The four user-machine-environment configurations.
    Environment,
    /// Machine parasite.
    Parasite,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::UserEntropy,
        Figure::BiasedPrior,
        Figure::HighReward,
        Figure::DependenceSweep,
        Figure::Environment,
        Figure::Parasite,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::UserEntropy => "3a",
            Figure::BiasedPrior => "3b",
            Figure::HighReward => "3c",
            Figure::DependenceSweep => "4",
            Figure::Environment => "5",
            Figure::Parasite => "6",
        }
    }

    pub fn scenario_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            Figure::UserEntropy => &["simple"],
            Figure::BiasedPrior => &["simple_biased", "simple"],
            Figure::HighReward => &["simple_alpha2", "simple"],
            Figure::DependenceSweep => {
                return MI_SWEEP_GRID.iter().map(|&(wm, gs)| mi_sweep(wm, gs).name).collect();
            }
            Figure::Environment => &["hc", "lc", "hc_env", "hc_m"],
            Figure::Parasite => &["parasite"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn metrics(self) -> Vec<Metric> {
        let names: &[&str] = match self {
            Figure::UserEntropy | Figure::BiasedPrior | Figure::HighReward => &["H(s,m)"],
            // Under the user-focused dynamics m is redrawn every round, so the
            // user's dependence on the machine shows up between m and the
            // user's next state.
            Figure::DependenceSweep => &["I(s';m)", "I(s;m)"],
            Figure::Environment => &["H(s,e,m)", "I(s';m'|s,e,m)"],
            Figure::Parasite => &["H(s)", "H(m)", "I(s;m)", "TE(s->m)", "TE(m->s)"],
        };
        names.iter().map(|n| n.parse().expect("built-in metric name")).collect()
    }

    pub fn plan(self, seed: u64) -> Result<FigurePlan> {
        let scenarios = self
            .scenario_names()
            .iter()
            .map(|n| preset(n).map(|cfg| ScenarioConfig { seed, ..cfg }))
            .collect::<Result<_>>()?;
        Ok(FigurePlan { figure: self, seed, scenarios, metrics: self.metrics(), window: DEFAULT_WINDOW })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches("fig");
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| {
            let ids: Vec<_> = Figure::ALL.iter().map(|f| f.id()).collect();
            Error::config(format!("unknown figure `{s}`; expected one of {}", ids.join(", ")))
        })
    }
}

/// What a figure pipeline runs. Scenarios all share the same seed.
#[derive(Debug, Clone)]
pub struct FigurePlan {
    pub figure: Figure,
    pub seed: u64,
    pub scenarios: Vec<ScenarioConfig>,
    pub metrics: Vec<Metric>,
    pub window: usize,
}

impl FigurePlan {
    /// Shrink or stretch every scenario (used by quick checks and tests).
    pub fn with_size(mut self, replicas: Option<usize>, horizon: Option<usize>) -> Self {
        for cfg in &mut self.scenarios {
            cfg.replicas = replicas.unwrap_or(cfg.replicas);
            cfg.horizon = horizon.unwrap_or(cfg.horizon);
        }
        self
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub artifact: RunArtifact,
    pub aggregate: Aggregate,
}

impl ScenarioRun {
    pub fn name(&self) -> &str {
        &self.artifact.config.name
    }

    pub fn summary(&self, metric: &str) -> Result<&SeriesSummary> {
        self.aggregate
            .summary(metric)
            .ok_or_else(|| Error::domain(format!("{}: no series for {metric}", self.name())))
    }
}

/// Simulate one scenario and estimate the requested metrics.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    metrics: &[Metric],
    window: usize,
    mode: EstimationMode,
    opts: &SeriesOptions,
    jobs: usize,
) -> Result<ScenarioRun> {
    let artifact = RunArtifact::execute(cfg, jobs)?;
    log::info!("{}: {} replicas x {} steps", cfg.name, cfg.replicas, cfg.horizon);
    let aggregate = aggregate(&cfg.name, &artifact.trajectories, metrics, window, mode, opts)?;
    Ok(ScenarioRun { artifact, aggregate })
}

#[derive(Debug, Clone)]
pub struct FigureRun {
    pub figure: Figure,
    pub seed: u64,
    pub runs: Vec<ScenarioRun>,
}

pub fn run_figure(plan: &FigurePlan, jobs: usize) -> Result<FigureRun> {
    let runs = plan
        .scenarios
        .iter()
        .map(|cfg| run_scenario(cfg, &plan.metrics, plan.window, EstimationMode::Windowed, &SeriesOptions::default(), jobs))
        .collect::<Result<_>>()?;
    Ok(FigureRun { figure: plan.figure, seed: plan.seed, runs })
}

/// File-name-safe form of a scenario name: `mi_sweep(-4,1)` becomes `mi_sweep_-4_1`.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '-' | '_' | '.' => out.push(c),
            ')' => {}
            _ => out.push('_'),
        }
    }
    out
}

#[derive(Serialize)]
struct FigureManifest<'a> {
    figure: &'a str,
    seed: u64,
    metadata: RunMetadata,
    scenarios: Vec<&'a str>,
    files: Vec<String>,
}

impl FigureRun {
    pub fn scenario(&self, name: &str) -> Result<&ScenarioRun> {
        self.runs
            .iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::domain(format!("figure {} has no scenario `{name}`", self.figure)))
    }

    pub fn summaries(&self) -> Vec<SeriesSummary> {
        self.runs.iter().flat_map(|r| r.aggregate.summaries.iter().cloned()).collect()
    }

    /// Write every CSV, the summary and a manifest into `dir`. Returns the
    /// paths written, manifest last.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for run in &self.runs {
            let stem = slug(run.name());
            written.push(write_file(dir, &format!("{stem}.config.json"), &run.artifact.config.to_json()?)?);
            written.push(write_file(dir, &format!("{stem}.trajectories.csv"), &trajectories_to_csv(&run.artifact.trajectories))?);
            written.push(write_file(dir, &format!("{stem}.metrics.csv"), &metrics_to_csv(&run.aggregate.series))?);
        }
        written.push(write_file(dir, "summary.json", &summaries_to_json(&self.summaries())?)?);
        let manifest = FigureManifest {
            figure: self.figure.id(),
            seed: self.seed,
            metadata: RunMetadata::now(),
            scenarios: self.runs.iter().map(|r| r.name()).collect(),
            files: written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        written.push(write_file(dir, "manifest.json", &text)?);
        Ok(written)
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert!("7".parse::<Figure>().is_err());
    }

    #[test]
    fn sweep_figure_has_six_scenarios() {
        let plan = Figure::DependenceSweep.plan(7).unwrap();
        assert_eq!(plan.scenarios.len(), 6);
        assert!(plan.scenarios.iter().all(|c| c.seed == 7));
        assert_eq!(slug(&plan.scenarios[4].name), "mi_sweep_-4_1");
    }

    #[test]
    fn small_figure_run_writes_files() {
        let plan = Figure::BiasedPrior.plan(3).unwrap().with_size(Some(3), Some(60));
        let run = run_figure(&plan, 1).unwrap();
        assert_eq!(run.runs.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let files = run.write(dir.path()).unwrap();
        assert_eq!(files.len(), 2 * 3 + 2);
        let csv = fs::read_to_string(dir.path().join("simple_biased.metrics.csv")).unwrap();
        assert!(csv.starts_with("# schema_version=1\nmetric,t,mean,std,window,n_runs\n\"H(s,m)\",25,"));
        assert_eq!(csv.lines().count(), 2 + 36);
    }
}
