use std::fmt::Write as _;

use serde::Serialize;

use crate::game::{Trajectory, SCHEMA_LINE};
use crate::infometrics::{ensemble_series, windowed_series, ExactPoint, Metric, MetricSeries, SeriesOptions};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "metric,t,mean,std,window,n_runs";
pub const ORACLE_HEADER: &str = "metric,t,exact";

/// Window length used unless a run asks for another.
pub const DEFAULT_WINDOW: usize = 25;
/// Number of window positions averaged for the early and late summaries.
pub const SUMMARY_SPAN: usize = 50;
/// Distance from the final value at which a series counts as settled.
pub const SETTLE_TOL: f64 = 0.1;

/// Windowed (per-replica) or ensemble (per-timestep, across replicas) estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationMode {
    #[default]
    Windowed,
    Ensemble,
}

/// Scalar statistics of one series, as written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub scenario: String,
    pub metric: String,
    pub window: usize,
    pub n_runs: usize,
    pub points: usize,
    /// Mean over the first `span` window positions.
    pub early_mean: f64,
    /// Mean over the last `span` window positions.
    pub late_mean: f64,
    pub span: usize,
    pub first_window_mean: f64,
    pub final_window_mean: f64,
    /// Cross-replica spread averaged over window ends in the first half of the run.
    pub first_half_std: f64,
    pub late_std: f64,
    /// First window end after which the mean stays within `settle_tol` of
    /// its final value.
    pub settle_t: usize,
    pub settle_tol: f64,
    pub max_identity_residual: f64,
    pub clamped: usize,
}

fn average(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// First `t` from which every later point is within `tol` of the last point.
pub fn settle_step(series: &MetricSeries, tol: f64) -> usize {
    let last = match series.points.last() {
        Some(p) => p.mean,
        None => return 0,
    };
    let mut settle = series.points.last().map_or(0, |p| p.t);
    for p in series.points.iter().rev() {
        if (p.mean - last).abs() > tol {
            break;
        }
        settle = p.t;
    }
    settle
}

pub fn summarize(scenario: &str, series: &MetricSeries, horizon: usize) -> SeriesSummary {
    let pts = &series.points;
    let span = SUMMARY_SPAN.min(pts.len());
    let half = horizon / 2;
    SeriesSummary {
        scenario: scenario.to_string(),
        metric: series.metric.clone(),
        window: series.window,
        n_runs: series.n_runs,
        points: pts.len(),
        early_mean: average(pts[..span].iter().map(|p| p.mean)),
        late_mean: average(pts[pts.len() - span..].iter().map(|p| p.mean)),
        span,
        first_window_mean: pts.first().map_or(f64::NAN, |p| p.mean),
        final_window_mean: pts.last().map_or(f64::NAN, |p| p.mean),
        first_half_std: average(pts.iter().filter(|p| p.t <= half).map(|p| p.std)),
        late_std: average(pts[pts.len() - span..].iter().map(|p| p.std)),
        settle_t: settle_step(series, SETTLE_TOL),
        settle_tol: SETTLE_TOL,
        max_identity_residual: series.max_identity_residual,
        clamped: series.clamped,
    }
}

/// Metric series plus their summaries for one scenario.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub series: Vec<MetricSeries>,
    pub summaries: Vec<SeriesSummary>,
}

impl Aggregate {
    pub fn series(&self, metric: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.metric == metric)
    }

    pub fn summary(&self, metric: &str) -> Option<&SeriesSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }
}

/// Estimate every requested metric over a set of replicas. Trajectories are
/// consumed in run order so the result does not depend on how they were
/// produced.
pub fn aggregate(
    scenario: &str,
    trajectories: &[Trajectory],
    metrics: &[Metric],
    window: usize,
    mode: EstimationMode,
    opts: &SeriesOptions,
) -> Result<Aggregate> {
    if trajectories.is_empty() {
        return Err(Error::domain("aggregation needs at least one replica"));
    }
    let sorted;
    let ordered: &[Trajectory] = if trajectories.windows(2).all(|w| w[0].run < w[1].run) {
        trajectories
    } else {
        let mut v = trajectories.to_vec();
        v.sort_by_key(|t| t.run);
        sorted = v;
        &sorted
    };
    let horizon = ordered[0].len();
    let mut series = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let s = match mode {
            EstimationMode::Windowed => windowed_series(ordered, metric, window, opts)?,
            EstimationMode::Ensemble => ensemble_series(ordered, metric, opts)?,
        };
        if s.clamped > 0 {
            log::warn!("{scenario}: {} estimates of {} came out negative and were reset to 0", s.clamped, s.metric);
        }
        series.push(s);
    }
    let summaries = series.iter().map(|s| summarize(scenario, s, horizon)).collect();
    Ok(Aggregate { series, summaries })
}

/// Twelve significant digits, fixed layout on every platform.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Quote a field when it contains a separator (metric names such as `H(s,m)` do).
pub fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

pub fn metrics_to_csv(series: &[MetricSeries]) -> String {
    let mut out = format!("{SCHEMA_LINE}\n{METRICS_HEADER}\n");
    for s in series {
        for p in &s.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&s.metric),
                p.t,
                format_float(p.mean),
                format_float(p.std),
                s.window,
                s.n_runs
            );
        }
    }
    out
}

pub fn oracle_to_csv(points: &[ExactPoint]) -> String {
    let mut out = format!("{SCHEMA_LINE}\n{ORACLE_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", csv_field(&p.metric), p.t, format_float(p.exact));
    }
    out
}

pub fn summaries_to_json(summaries: &[SeriesSummary]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        series: &'a [SeriesSummary],
    }
    let mut s = serde_json::to_string_pretty(&Doc { schema_version: crate::game::SCHEMA_VERSION, series: summaries })?;
    s.push('\n');
    Ok(s)
}
