//! Plug-in information measures in bits.

use crate::infometrics::dist::EmpiricalDist;
use crate::{Error, Result};

/// Negative estimates smaller than this (in magnitude) are rounding noise.
pub const NEGATIVE_TOL: f64 = 1e-9;
const NORMALISATION_TOL: f64 = 1e-9;

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy of a probability vector. Rejects input that is not a
/// distribution.
pub fn entropy_of_probabilities(p: &[f64]) -> Result<f64> {
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain("probabilities must be finite and non-negative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALISATION_TOL {
        return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(p.iter().copied().map(h).sum())
}

/// Joint entropy of every variable in `dist`.
pub fn entropy(dist: &EmpiricalDist) -> Result<f64> {
    let p = dist.probabilities()?;
    Ok(p.into_iter().map(h).sum())
}

/// Entropy of the sub-tuple `axes`.
pub fn marginal_entropy(dist: &EmpiricalDist, axes: &[usize]) -> Result<f64> {
    entropy(&dist.marginal(axes))
}

/// A clamped estimate together with the bookkeeping a caller may want to log.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub bits: f64,
    /// `|direct - entropy identity|`.
    pub identity_residual: f64,
    /// A negative value beyond [`NEGATIVE_TOL`] was reset to zero.
    pub clamped: bool,
    /// Conditioning cells with no mass (conditional measures only).
    pub empty_cells: usize,
}

fn clamp(raw: f64) -> (f64, bool) {
    if raw < -NEGATIVE_TOL {
        (0.0, true)
    } else {
        (raw.max(0.0), false)
    }
}

fn axes(range: std::ops::Range<usize>) -> Vec<usize> {
    range.collect()
}

/// I(X;Y) where X is the first `x_len` variables of `dist` and Y the rest.
///
/// Computed as Σ p(x,y) log p(x,y)/(p(x)p(y)); the entropy identity is kept
/// as a cross-check.
pub fn mutual_information(dist: &EmpiricalDist, x_len: usize) -> Result<Estimate> {
    let (direct, identity) = mi_raw(dist, x_len)?;
    let (bits, clamped) = clamp(direct);
    Ok(Estimate { bits, identity_residual: (direct - identity).abs(), clamped, empty_cells: 0 })
}

fn mi_raw(dist: &EmpiricalDist, x_len: usize) -> Result<(f64, f64)> {
    let n = dist.n_vars();
    if x_len == 0 || x_len >= n {
        return Err(Error::domain("mutual information needs two non-empty variable groups"));
    }
    let p = dist.probabilities()?;
    let px = dist.marginal(&axes(0..x_len)).probabilities()?;
    let py = dist.marginal(&axes(x_len..n)).probabilities()?;
    let ny = py.len();
    let mut direct = 0.0;
    for (code, &pxy) in p.iter().enumerate() {
        if pxy > 0.0 {
            let (xi, yi) = (code / ny, code % ny);
            direct += pxy * (pxy / (px[xi] * py[yi])).log2();
        }
    }
    let identity = entropy_of_probabilities_unchecked(&px) + entropy_of_probabilities_unchecked(&py)
        - entropy_of_probabilities_unchecked(&p);
    Ok((direct, identity))
}

fn entropy_of_probabilities_unchecked(p: &[f64]) -> f64 {
    p.iter().copied().map(h).sum()
}

/// I(X;Y|Z) with the variables of `dist` laid out as X, then Y, then Z.
/// Conditioning cells with no observations contribute nothing and are
/// counted in [`Estimate::empty_cells`].
pub fn conditional_mutual_information(dist: &EmpiricalDist, x_len: usize, y_len: usize) -> Result<Estimate> {
    let n = dist.n_vars();
    if x_len == 0 || y_len == 0 || x_len + y_len > n {
        return Err(Error::domain("conditional mutual information needs non-empty X and Y"));
    }
    if dist.is_empty() {
        return Err(Error::domain("empty distribution"));
    }
    let xy = x_len + y_len;
    let zs = axes(xy..n);
    let pz = dist.marginal(&zs);
    let total = dist.total();

    let mut direct = 0.0;
    let mut empty = 0;
    // Slice the joint by z and evaluate I(X;Y | Z=z) on each slice.
    let dims = dist.dims();
    let slice_dims = &dims[..xy];
    let nz = pz.counts().len();
    let slice_size: usize = slice_dims.iter().product();
    for z in 0..nz {
        let cz = pz.counts()[z];
        if cz <= 0.0 {
            empty += 1;
            continue;
        }
        // Row-major layout puts Z last, so the slice is a strided gather.
        let mut counts = Vec::with_capacity(slice_size);
        for c in 0..slice_size {
            counts.push(dist.counts()[c * nz + z]);
        }
        let slice = EmpiricalDist::from_counts(slice_dims, counts)?;
        direct += cz / total * mi_raw(&slice, x_len)?.0;
    }

    // H(X,Z) + H(Y,Z) - H(X,Y,Z) - H(Z)
    let xz: Vec<usize> = axes(0..x_len).into_iter().chain(zs.iter().copied()).collect();
    let yz: Vec<usize> = axes(x_len..xy).into_iter().chain(zs.iter().copied()).collect();
    let identity = marginal_entropy(dist, &xz)? + marginal_entropy(dist, &yz)?
        - entropy(dist)?
        - if zs.is_empty() { 0.0 } else { entropy(&pz)? };
    let (bits, clamped) = clamp(direct);
    Ok(Estimate { bits, identity_residual: (direct - identity).abs(), clamped, empty_cells: empty })
}

/// Transfer entropy TE(X→Y) = I(Y_{t+1}; X_t | Y_t) from aligned series.
pub fn transfer_entropy(source: &[u8], target: &[u8]) -> Result<Estimate> {
    transfer_entropy_pooled(&[(source, target)])
}

/// Transfer entropy with transitions pooled across several aligned series.
pub fn transfer_entropy_pooled(pairs: &[(&[u8], &[u8])]) -> Result<Estimate> {
    let mut dist = EmpiricalDist::binary(3);
    for (source, target) in pairs {
        if source.len() != target.len() {
            return Err(Error::domain("source and target series differ in length"));
        }
        if source.len() < 2 {
            return Err(Error::domain("transfer entropy needs a window of at least 2 steps"));
        }
        if source.iter().chain(target.iter()).any(|&v| v > 1) {
            return Err(Error::domain("transfer entropy series must be binary"));
        }
        for t in 0..source.len() - 1 {
            dist.add(&[target[t + 1], source[t], target[t]]);
        }
    }
    conditional_mutual_information(&dist, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn probs(dims: &[usize], p: &[f64]) -> EmpiricalDist {
        EmpiricalDist::from_probabilities(dims, p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_closed_forms() {
        assert_abs_diff_eq!(entropy_of_probabilities(&[0.25; 4]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(entropy_of_probabilities(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy_of_probabilities(&[0.5, 0.25, 0.125, 0.125]).unwrap(), 1.75, epsilon = 1e-15);
        assert!(entropy_of_probabilities(&[0.5, 0.4]).is_err());
        assert!(entropy_of_probabilities(&[1.2, -0.2]).is_err());
        assert_abs_diff_eq!(entropy(&probs(&[4], &[0.5, 0.25, 0.125, 0.125])).unwrap(), 1.75, epsilon = 1e-15);
    }

    #[test]
    fn mutual_information_closed_forms() {
        // p(x)p(y) with p(x=1) = 0.3, p(y=1) = 0.6.
        let prod = [0.7 * 0.4, 0.7 * 0.6, 0.3 * 0.4, 0.3 * 0.6];
        assert_abs_diff_eq!(mutual_information(&probs(&[2, 2], &prod), 1).unwrap().bits, 0.0, epsilon = 1e-15);

        let copy = mutual_information(&probs(&[2, 2], &[0.5, 0.0, 0.0, 0.5]), 1).unwrap();
        assert_abs_diff_eq!(copy.bits, 1.0, epsilon = 1e-15);

        let d = probs(&[2, 2], &[0.4, 0.1, 0.1, 0.4]);
        let mi = mutual_information(&d, 1).unwrap();
        let expected = 2.0 - entropy_of_probabilities(&[0.4, 0.1, 0.1, 0.4]).unwrap();
        assert_abs_diff_eq!(mi.bits, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(mi.bits, 0.2780719051126377, epsilon = 1e-12);
        assert!(mi.identity_residual < 1e-12);
    }

    #[test]
    fn conditional_measures() {
        // Z constant: I(X;Y|Z) = I(X;Y).
        let mut xyz = vec![0.0; 8];
        for (xy, p) in [0.4, 0.1, 0.1, 0.4].iter().enumerate() {
            xyz[xy * 2] = *p;
        }
        let d = probs(&[2, 2, 2], &xyz);
        let cmi = conditional_mutual_information(&d, 1, 1).unwrap();
        assert_abs_diff_eq!(cmi.bits, 0.2780719051126377, epsilon = 1e-12);
        assert_eq!(cmi.empty_cells, 1);

        // X = Y xor Z with Y, Z fair: I(X;Y) = 0 but I(X;Y|Z) = 1.
        let mut xor = vec![0.0; 8];
        for y in 0..2 {
            for z in 0..2 {
                xor[((y ^ z) * 2 + y) * 2 + z] = 0.25;
            }
        }
        let d = probs(&[2, 2, 2], &xor);
        assert_abs_diff_eq!(conditional_mutual_information(&d, 1, 1).unwrap().bits, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information(&d.marginal(&[0, 1]), 1).unwrap().bits, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transfer_entropy_copy_and_iid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<u8> = (0..20_001).map(|_| rng.gen_range(0..2)).collect();
        // y copies x with a one-step delay.
        let mut y = vec![0u8];
        y.extend_from_slice(&x[..x.len() - 1]);
        assert_abs_diff_eq!(transfer_entropy(&x, &y).unwrap().bits, 1.0, epsilon = 1e-3);
        assert!(transfer_entropy(&y, &x).unwrap().bits < 0.01);

        let z: Vec<u8> = (0..20_001).map(|_| rng.gen_range(0..2)).collect();
        assert!(transfer_entropy(&x, &z).unwrap().bits <= 0.02);
        assert!(transfer_entropy(&[1], &[0]).is_err());
        assert!(transfer_entropy(&[1, 0], &[0]).is_err());
    }

    fn random_joint(weights: &[f64]) -> EmpiricalDist {
        EmpiricalDist::from_counts(&[2, 2, 2], weights.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn mi_is_symmetric_and_bounded(w in prop::collection::vec(0.0f64..1.0, 4)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let d = EmpiricalDist::from_counts(&[2, 2], w).unwrap();
            let a = mutual_information(&d, 1).unwrap();
            let b = mutual_information(&d.permuted(&[1, 0]), 1).unwrap();
            prop_assert!((a.bits - b.bits).abs() < 1e-12);
            prop_assert!(a.bits >= 0.0);
            prop_assert!(a.bits <= marginal_entropy(&d, &[0]).unwrap().min(marginal_entropy(&d, &[1]).unwrap()) + 1e-12);
            prop_assert!(a.identity_residual < 1e-9);
        }

        #[test]
        fn cmi_chain_rule(w in prop::collection::vec(0.0f64..1.0, 8)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            // I(X;Y,Z) = I(X;Z) + I(X;Y|Z)
            let d = random_joint(&w);
            let whole = mutual_information(&d, 1).unwrap().bits;
            let xz = mutual_information(&d.marginal(&[0, 2]), 1).unwrap().bits;
            let cond = conditional_mutual_information(&d, 1, 1).unwrap();
            prop_assert!((whole - xz - cond.bits).abs() < 1e-9);
            prop_assert!(cond.identity_residual < 1e-9);
            let swapped = conditional_mutual_information(&d.permuted(&[1, 0, 2]), 1, 1).unwrap();
            prop_assert!((swapped.bits - cond.bits).abs() < 1e-12);
        }
    }
}
