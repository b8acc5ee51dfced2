use crate::{Error, Result};

const NORMALISATION_TOL: f64 = 1e-9;

/// Dense joint distribution over a tuple of discrete variables, stored as
/// (possibly fractional) counts in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    dims: Vec<usize>,
    counts: Vec<f64>,
    total: f64,
}

impl EmpiricalDist {
    /// Empty counter over variables with the given cardinalities.
    pub fn new(dims: &[usize]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "every variable needs at least one value");
        let cells = dims.iter().product();
        Self { dims: dims.to_vec(), counts: vec![0.0; cells], total: 0.0 }
    }

    /// Counter over `n` binary variables.
    pub fn binary(n: usize) -> Self {
        Self::new(&vec![2; n])
    }

    pub fn from_counts(dims: &[usize], counts: Vec<f64>) -> Result<Self> {
        let mut d = Self::new(dims);
        if counts.len() != d.counts.len() {
            return Err(Error::domain(format!("expected {} cells, got {}", d.counts.len(), counts.len())));
        }
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::domain("counts must be finite and non-negative"));
        }
        d.total = counts.iter().sum();
        d.counts = counts;
        Ok(d)
    }

    /// Wrap an already-normalised probability table.
    pub fn from_probabilities(dims: &[usize], probs: Vec<f64>) -> Result<Self> {
        let d = Self::from_counts(dims, probs)?;
        if (d.total - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::domain(format!("probabilities sum to {}, not 1", d.total)));
        }
        Ok(d)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_vars(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total <= 0.0
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn encode(&self, values: &[u8]) -> usize {
        debug_assert_eq!(values.len(), self.dims.len());
        values.iter().zip(&self.dims).fold(0, |code, (&v, &d)| {
            debug_assert!((v as usize) < d);
            code * d + v as usize
        })
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = code % d;
            code /= d;
        }
        out
    }

    pub fn add(&mut self, values: &[u8]) {
        let code = self.encode(values);
        self.add_code(code, 1.0);
    }

    pub fn add_code(&mut self, code: usize, weight: f64) {
        self.counts[code] += weight;
        self.total += weight;
    }

    /// Add `lambda` to every cell.
    pub fn with_pseudocount(mut self, lambda: f64) -> Self {
        for c in &mut self.counts {
            *c += lambda;
        }
        self.total += lambda * self.counts.len() as f64;
        self
    }

    pub fn probabilities(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::domain("empty distribution has no probabilities"));
        }
        Ok(self.counts.iter().map(|c| c / self.total).collect())
    }

    /// Sum out every variable not listed in `axes`; the result keeps `axes` order.
    pub fn marginal(&self, axes: &[usize]) -> EmpiricalDist {
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut out = EmpiricalDist::new(&dims);
        for (code, &c) in self.counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let full = self.decode(code);
            let sub = axes.iter().fold(0, |acc, &a| acc * self.dims[a] + full[a]);
            out.counts[sub] += c;
        }
        out.total = self.total;
        out
    }

    /// Reorder variables.
    pub fn permuted(&self, order: &[usize]) -> EmpiricalDist {
        assert_eq!(order.len(), self.dims.len());
        self.marginal(order)
    }
}
