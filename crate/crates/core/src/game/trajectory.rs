use std::fmt::Write as _;

use crate::agents::PolicyStep;
use crate::kernels::JointState;
use crate::{Error, Result};

pub const TRAJECTORY_HEADER: &str = "run,t,s,m,e,r,o,reward";
pub const SCHEMA_LINE: &str = "# schema_version=1";

/// One round of play: the state before the round, the prompt, the reply and
/// the reward credited for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: usize,
    pub state: JointState,
    pub r: u8,
    pub o: u8,
    pub reward: f64,
}

/// Variables a record exposes to the metric layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    S,
    M,
    E,
    R,
    O,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::S, Channel::M, Channel::E, Channel::R, Channel::O];

    pub fn name(self) -> &'static str {
        match self {
            Channel::S => "s",
            Channel::M => "m",
            Channel::E => "e",
            Channel::R => "r",
            Channel::O => "o",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl Record {
    #[inline]
    pub fn value(&self, channel: Channel) -> u8 {
        match channel {
            Channel::S => self.state.s,
            Channel::M => self.state.m,
            Channel::E => self.state.e,
            Channel::R => self.r,
            Channel::O => self.o,
        }
    }
}

/// A single replica's history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run: usize,
    pub records: Vec<Record>,
    /// State after the last round; unknown when loaded from CSV.
    pub final_state: Option<JointState>,
    /// Softmax probabilities and choices; empty when loaded from CSV.
    pub policy_trace: Vec<PolicyStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Timestamps run 1..=T without gaps.
    pub fn is_chained(&self) -> bool {
        self.records.iter().enumerate().all(|(i, r)| r.t == i + 1)
    }
}

/// Serialise trajectories in replica order.
pub fn trajectories_to_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA_LINE);
    out.push('\n');
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for traj in trajectories {
        for rec in &traj.records {
            let JointState { s, m, e } = rec.state;
            let _ = writeln!(out, "{},{},{s},{m},{e},{},{},{}", traj.run, rec.t, rec.r, rec.o, rec.reward);
        }
    }
    out
}

fn parse_bit(field: &str, what: &str, line: usize) -> Result<u8> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(format!("line {line}: `{what}` must be 0 or 1, got `{other}`"))),
    }
}

/// Parse the trajectory CSV format. Rows of one run must be contiguous and in
/// time order.
pub fn trajectories_from_csv(text: &str) -> Result<Vec<Trajectory>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, header)) if header.trim() == TRAJECTORY_HEADER => {}
        Some((i, header)) => {
            return Err(Error::parse(format!(
                "line {}: expected header `{TRAJECTORY_HEADER}`, got `{header}`",
                i + 1
            )))
        }
        None => return Err(Error::parse("empty trajectory file")),
    }
    let mut out: Vec<Trajectory> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(format!("line {n}: expected 8 fields, got {}", fields.len())));
        }
        let run: usize = fields[0].parse().map_err(|_| Error::parse(format!("line {n}: bad run `{}`", fields[0])))?;
        let t: usize = fields[1].parse().map_err(|_| Error::parse(format!("line {n}: bad t `{}`", fields[1])))?;
        let state = JointState::new(
            parse_bit(fields[2], "s", n)?,
            parse_bit(fields[3], "m", n)?,
            parse_bit(fields[4], "e", n)?,
        )?;
        let r = parse_bit(fields[5], "r", n)?;
        let o = parse_bit(fields[6], "o", n)?;
        let reward: f64 =
            fields[7].parse().map_err(|_| Error::parse(format!("line {n}: bad reward `{}`", fields[7])))?;
        if out.last().map(|tr| tr.run) != Some(run) {
            if out.iter().any(|tr| tr.run == run) {
                return Err(Error::parse(format!("line {n}: rows of run {run} are not contiguous")));
            }
            out.push(Trajectory { run, records: Vec::new(), final_state: None, policy_trace: Vec::new() });
        }
        let traj = out.last_mut().expect("pushed above");
        if t != traj.records.len() + 1 {
            return Err(Error::parse(format!("line {n}: run {run} expected t = {}, got {t}", traj.records.len() + 1)));
        }
        traj.records.push(Record { t, state, r, o, reward });
    }
    if out.is_empty() {
        return Err(Error::parse("trajectory file has no rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{preset, run_replica, ScenarioConfig};
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let cfg = ScenarioConfig { horizon: 3, replicas: 2, ..preset("simple_alpha2").unwrap() };
        let trajs: Vec<_> = (0..2).map(|i| run_replica(&cfg, i).unwrap()).collect();
        let csv = trajectories_to_csv(&trajs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SCHEMA_LINE));
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        assert!(lines.next().unwrap().starts_with("0,1,0,0,0,"));
        assert_eq!(csv.lines().count(), 2 + 6);
    }

    #[test]
    fn rejects_malformed_rows() {
        let head = format!("{TRAJECTORY_HEADER}\n");
        assert!(trajectories_from_csv("").is_err());
        assert!(trajectories_from_csv("run,t\n0,1\n").is_err());
        assert!(trajectories_from_csv(&format!("{head}0,1,2,0,0,0,0,0\n")).is_err());
        assert!(trajectories_from_csv(&format!("{head}0,2,0,0,0,0,0,0\n")).is_err());
        assert!(trajectories_from_csv(&format!("{head}0,1,0,0,0,0,0,0\n1,1,0,0,0,0,0,0\n0,2,0,0,0,0,0,0\n")).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(seed in 0u64..1000, horizon in 2usize..40, kind in 0usize..3) {
            let name = ["simple", "hc_m", "parasite"][kind];
            let cfg = ScenarioConfig { horizon, replicas: 3, seed, ..preset(name).unwrap() };
            let trajs: Vec<_> = (0..3).map(|i| run_replica(&cfg, i).unwrap()).collect();
            let text = trajectories_to_csv(&trajs);
            let back = trajectories_from_csv(&text).unwrap();
            prop_assert_eq!(back.len(), 3);
            for (a, b) in trajs.iter().zip(&back) {
                prop_assert_eq!(&a.records, &b.records);
            }
            prop_assert_eq!(trajectories_to_csv(&back), text);
        }
    }
}
