use std::fmt;
use std::str::FromStr;

use crate::game::{Channel, Record};
use crate::infometrics::dist::EmpiricalDist;
use crate::infometrics::measures::{conditional_mutual_information, entropy, mutual_information, Estimate};
use crate::{Error, Result};

/// A channel at time t, or at t+1 when `next` is set (written `s'`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    pub channel: Channel,
    pub next: bool,
}

impl Var {
    pub const fn now(channel: Channel) -> Self {
        Self { channel, next: false }
    }

    pub const fn next(channel: Channel) -> Self {
        Self { channel, next: true }
    }

    pub(crate) fn read(self, now: &Record, next: Option<&Record>) -> u8 {
        if self.next {
            next.expect("lagged variable needs a successor record").value(self.channel)
        } else {
            now.value(self.channel)
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.channel.name(), if self.next { "'" } else { "" })
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, next) = match s.strip_suffix('\'') {
            Some(n) => (n, true),
            None => (s, false),
        };
        let channel = Channel::from_name(name).ok_or_else(|| {
            Error::config(format!("unknown variable `{s}`; trajectories carry s, m, e, r, o (append ' for t+1)"))
        })?;
        Ok(Var { channel, next })
    }
}

/// An information measure over trajectory variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Metric {
    Entropy(Vec<Var>),
    MutualInformation(Vec<Var>, Vec<Var>),
    ConditionalMutualInformation(Vec<Var>, Vec<Var>, Vec<Var>),
    /// I(target'; source | target).
    TransferEntropy { source: Channel, target: Channel },
}

impl Metric {
    pub fn entropy(vars: &[Var]) -> Self {
        Metric::Entropy(vars.to_vec())
    }

    pub fn mi(x: &[Var], y: &[Var]) -> Self {
        Metric::MutualInformation(x.to_vec(), y.to_vec())
    }

    pub fn cmi(x: &[Var], y: &[Var], z: &[Var]) -> Self {
        Metric::ConditionalMutualInformation(x.to_vec(), y.to_vec(), z.to_vec())
    }

    pub fn te(source: Channel, target: Channel) -> Self {
        Metric::TransferEntropy { source, target }
    }

    /// Variables in the order the joint distribution is laid out.
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Metric::Entropy(v) => v.clone(),
            Metric::MutualInformation(x, y) => [x.as_slice(), y].concat(),
            Metric::ConditionalMutualInformation(x, y, z) => [x.as_slice(), y, z].concat(),
            Metric::TransferEntropy { source, target } => vec![Var::next(*target), Var::now(*source), Var::now(*target)],
        }
    }

    /// Needs consecutive record pairs rather than single records.
    pub fn is_lagged(&self) -> bool {
        self.vars().iter().any(|v| v.next)
    }

    /// Smallest window that yields at least one sample.
    pub fn min_window(&self) -> usize {
        if self.is_lagged() {
            2
        } else {
            1
        }
    }

    pub fn empty_distribution(&self) -> EmpiricalDist {
        EmpiricalDist::binary(self.vars().len())
    }

    /// Add the samples found in a contiguous run of records.
    pub fn accumulate(&self, dist: &mut EmpiricalDist, records: &[Record]) {
        let vars = self.vars();
        let mut buf = vec![0u8; vars.len()];
        let mut push = |now: &Record, next: Option<&Record>| {
            for (slot, v) in buf.iter_mut().zip(&vars) {
                *slot = v.read(now, next);
            }
            dist.add(&buf);
        };
        if self.is_lagged() {
            for pair in records.windows(2) {
                push(&pair[0], Some(&pair[1]));
            }
        } else {
            for rec in records {
                push(rec, None);
            }
        }
    }

    pub fn distribution(&self, records: &[Record]) -> EmpiricalDist {
        let mut d = self.empty_distribution();
        self.accumulate(&mut d, records);
        d
    }

    /// Evaluate on a joint laid out as [`Metric::vars`].
    pub fn evaluate(&self, dist: &EmpiricalDist) -> Result<Estimate> {
        if dist.n_vars() != self.vars().len() {
            return Err(Error::domain(format!("{self}: distribution has {} variables", dist.n_vars())));
        }
        match self {
            Metric::Entropy(_) => Ok(Estimate { bits: entropy(dist)?, ..Default::default() }),
            Metric::MutualInformation(x, _) => mutual_information(dist, x.len()),
            Metric::ConditionalMutualInformation(x, y, _) => conditional_mutual_information(dist, x.len(), y.len()),
            Metric::TransferEntropy { .. } => conditional_mutual_information(dist, 1, 1),
        }
    }

    pub fn estimate(&self, records: &[Record]) -> Result<Estimate> {
        let min = self.min_window();
        if records.len() < min {
            return Err(Error::domain(format!("{self} needs at least {min} records, got {}", records.len())));
        }
        self.evaluate(&self.distribution(records))
    }
}

fn join(vars: &[Var]) -> String {
    vars.iter().map(Var::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Entropy(v) => write!(f, "H({})", join(v)),
            Metric::MutualInformation(x, y) => write!(f, "I({};{})", join(x), join(y)),
            Metric::ConditionalMutualInformation(x, y, z) => write!(f, "I({};{}|{})", join(x), join(y), join(z)),
            Metric::TransferEntropy { source, target } => write!(f, "TE({}->{})", source.name(), target.name()),
        }
    }
}

fn parse_vars(s: &str, whole: &str) -> Result<Vec<Var>> {
    let vars: Vec<Var> = s.split(',').map(str::parse).collect::<Result<_>>()?;
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(Error::config(format!("metric `{whole}` repeats variable `{v}`")));
        }
    }
    Ok(vars)
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts `H(s,m)`, `I(s';m)`, `I(s';m|s,e)` and `TE(s->m)`.
    fn from_str(raw: &str) -> Result<Self> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::config(format!("cannot parse metric `{raw}`; expected H(..), I(..;..), I(..;..|..) or TE(a->b)"));
        let (head, body) = s.split_once('(').ok_or_else(bad)?;
        let body = body.strip_suffix(')').ok_or_else(bad)?;
        match head {
            "H" => Ok(Metric::Entropy(parse_vars(body, raw)?)),
            "I" => {
                let (x, rest) = body.split_once(';').ok_or_else(bad)?;
                let x = parse_vars(x, raw)?;
                match rest.split_once('|') {
                    Some((y, z)) => Ok(Metric::ConditionalMutualInformation(x, parse_vars(y, raw)?, parse_vars(z, raw)?)),
                    None => Ok(Metric::MutualInformation(x, parse_vars(rest, raw)?)),
                }
            }
            "TE" => {
                let (a, b) = body.split_once("->").ok_or_else(bad)?;
                let (a, b): (Var, Var) = (a.parse()?, b.parse()?);
                if a.next || b.next {
                    return Err(Error::config(format!("metric `{raw}`: transfer entropy takes plain channels")));
                }
                Ok(Metric::te(a.channel, b.channel))
            }
            _ => Err(bad()),
        }
    }
}
