use crate::game::Trajectory;
use crate::infometrics::metric::Metric;
use crate::infometrics::measures::Estimate;
use crate::{Error, Result};

/// How the spread across replicas is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesOptions {
    pub std: StdConvention,
    /// Added to every cell before estimating.
    pub pseudocount: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    /// Last timestep included.
    pub t: usize,
    pub mean: f64,
    pub std: f64,
}

/// A metric tracked over time, averaged across replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub metric: String,
    /// Window length; 0 for ensemble (across-replica) estimates.
    pub window: usize,
    pub n_runs: usize,
    pub points: Vec<SeriesPoint>,
    pub max_identity_residual: f64,
    /// Estimates that came out negative beyond rounding and were reset to 0.
    pub clamped: usize,
}

impl MetricSeries {
    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn at(&self, t: usize) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

pub fn mean_std(values: &[f64], convention: StdConvention) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match convention {
        StdConvention::Population => n as f64,
        StdConvention::Sample if n > 1 => (n - 1) as f64,
        StdConvention::Sample => return (mean, 0.0),
    };
    (mean, (ss / denom).sqrt())
}

fn common_horizon(trajectories: &[Trajectory]) -> Result<usize> {
    let first = trajectories.first().ok_or_else(|| Error::domain("no trajectories"))?;
    let t = first.len();
    if let Some(bad) = trajectories.iter().find(|tr| tr.len() != t) {
        return Err(Error::domain(format!(
            "trajectories differ in length: run {} has {} steps, run {} has {t}",
            bad.run,
            bad.len(),
            first.run
        )));
    }
    Ok(t)
}

struct Tally {
    residual: f64,
    clamped: usize,
}

impl Tally {
    fn record(&mut self, e: &Estimate) -> f64 {
        self.residual = self.residual.max(e.identity_residual);
        self.clamped += usize::from(e.clamped);
        e.bits
    }
}

fn evaluate(metric: &Metric, mut dist: crate::infometrics::EmpiricalDist, opts: &SeriesOptions) -> Result<Estimate> {
    if let Some(lambda) = opts.pseudocount {
        dist = dist.with_pseudocount(lambda);
    }
    metric.evaluate(&dist)
}

/// Sliding-window estimate per replica, then mean and spread across replicas.
///
/// Window ends run over `t = W..=T`; the window ending at `t` holds records
/// `t-W+1..=t`. Lagged metrics use the `W-1` transitions inside the window.
pub fn windowed_series(
    trajectories: &[Trajectory],
    metric: &Metric,
    window: usize,
    opts: &SeriesOptions,
) -> Result<MetricSeries> {
    let horizon = common_horizon(trajectories)?;
    let min = metric.min_window().max(2);
    if window < min {
        return Err(Error::domain(format!("{metric}: window must be at least {min}, got {window}")));
    }
    if window > horizon {
        return Err(Error::domain(format!("window {window} exceeds the horizon {horizon}")));
    }
    let mut tally = Tally { residual: 0.0, clamped: 0 };
    let mut points = Vec::with_capacity(horizon - window + 1);
    let mut values = vec![0.0; trajectories.len()];
    for end in window..=horizon {
        for (slot, tr) in values.iter_mut().zip(trajectories) {
            let dist = metric.distribution(&tr.records[end - window..end]);
            *slot = tally.record(&evaluate(metric, dist, opts)?);
        }
        let (mean, std) = mean_std(&values, opts.std);
        points.push(SeriesPoint { t: end, mean, std });
    }
    Ok(MetricSeries {
        metric: metric.to_string(),
        window,
        n_runs: trajectories.len(),
        points,
        max_identity_residual: tally.residual,
        clamped: tally.clamped,
    })
}

/// Estimate at each timestep from the cross-section of replicas. The spread
/// column is 0: there is one estimate per timestep.
pub fn ensemble_series(trajectories: &[Trajectory], metric: &Metric, opts: &SeriesOptions) -> Result<MetricSeries> {
    let horizon = common_horizon(trajectories)?;
    let lag = usize::from(metric.is_lagged());
    let mut tally = Tally { residual: 0.0, clamped: 0 };
    let mut points = Vec::new();
    for t in 1..=horizon - lag {
        let mut dist = metric.empty_distribution();
        for tr in trajectories {
            metric.accumulate(&mut dist, &tr.records[t - 1..t + lag]);
        }
        let mean = tally.record(&evaluate(metric, dist, opts)?);
        points.push(SeriesPoint { t, mean, std: 0.0 });
    }
    Ok(MetricSeries {
        metric: metric.to_string(),
        window: 0,
        n_runs: trajectories.len(),
        points,
        max_identity_residual: tally.residual,
        clamped: tally.clamped,
    })
}

/// One estimate from every sample in timesteps `first..=last` of every replica.
/// Lagged metrics use transitions starting in that range.
pub fn pooled_estimate(
    trajectories: &[Trajectory],
    metric: &Metric,
    first: usize,
    last: usize,
    opts: &SeriesOptions,
) -> Result<Estimate> {
    let horizon = common_horizon(trajectories)?;
    let lag = usize::from(metric.is_lagged());
    if first < 1 || first > last || last + lag > horizon {
        return Err(Error::domain(format!("pooling range {first}..={last} is outside 1..={horizon}")));
    }
    let mut dist = metric.empty_distribution();
    for tr in trajectories {
        metric.accumulate(&mut dist, &tr.records[first - 1..last + lag]);
    }
    evaluate(metric, dist, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{preset, run_all, Record};
    use crate::kernels::JointState;

    fn constant(runs: usize, horizon: usize) -> Vec<Trajectory> {
        (0..runs)
            .map(|run| Trajectory {
                run,
                records: (1..=horizon)
                    .map(|t| Record { t, state: JointState { s: 1, m: 0, e: 1 }, r: 1, o: 0, reward: 1.0 })
                    .collect(),
                final_state: None,
                policy_trace: Vec::new(),
            })
            .collect()
    }

    #[test]
    fn constant_trajectories_have_zero_entropy() {
        let trajs = constant(3, 20);
        let s = windowed_series(&trajs, &"H(s,m)".parse().unwrap(), 5, &SeriesOptions::default()).unwrap();
        assert_eq!(s.points.len(), 16);
        assert_eq!(s.points[0].t, 5);
        assert!(s.points.iter().all(|p| p.mean == 0.0 && p.std == 0.0));
    }

    #[test]
    fn window_equal_to_horizon_gives_one_point() {
        let trajs = constant(2, 10);
        let s = windowed_series(&trajs, &"I(s';m)".parse().unwrap(), 10, &SeriesOptions::default()).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].t, 10);
    }

    #[test]
    fn argument_errors() {
        let trajs = constant(2, 10);
        let h: Metric = "H(s)".parse().unwrap();
        let opts = SeriesOptions::default();
        assert!(windowed_series(&trajs, &h, 1, &opts).is_err());
        assert!(windowed_series(&trajs, &h, 11, &opts).is_err());
        assert!(windowed_series(&[], &h, 2, &opts).is_err());
        let mut uneven = trajs.clone();
        uneven[1].records.pop();
        assert!(windowed_series(&uneven, &h, 2, &opts).is_err());
        assert!(pooled_estimate(&trajs, &"TE(s->m)".parse().unwrap(), 1, 10, &opts).is_err());
    }

    #[test]
    fn std_conventions() {
        let (m, p) = mean_std(&[1.0, 3.0], StdConvention::Population);
        let (_, s) = mean_std(&[1.0, 3.0], StdConvention::Sample);
        assert_eq!((m, p), (2.0, 1.0));
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn windowed_matches_direct_estimate() {
        let cfg = crate::game::ScenarioConfig { horizon: 60, replicas: 4, ..preset("hc").unwrap() };
        let trajs = run_all(&cfg, 1).unwrap();
        let metric: Metric = "TE(s->m)".parse().unwrap();
        let s = windowed_series(&trajs, &metric, 20, &SeriesOptions::default()).unwrap();
        let direct: Vec<f64> = trajs.iter().map(|t| metric.estimate(&t.records[10..30]).unwrap().bits).collect();
        assert!((s.at(30).unwrap().mean - direct.iter().sum::<f64>() / 4.0).abs() < 1e-15);
        assert!(s.max_identity_residual < 1e-9);
        let pooled = pooled_estimate(&trajs, &metric, 1, 59, &SeriesOptions::default()).unwrap();
        assert!(pooled.bits >= 0.0);
        let ens = ensemble_series(&trajs, &metric, &SeriesOptions::default()).unwrap();
        assert_eq!(ens.points.len(), 59);
    }
}
