//! Points of the probability simplex.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{domain, Result};
use crate::linalg::Matrix;

/// Tolerance on `|sum(weights) - 1|` accepted by [`Histogram::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A dense histogram: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram(Vec<f64>);

impl Histogram {
    /// Wraps weights that already lie on the simplex.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain("histogram must have at least one bin"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(domain("histogram weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(domain(alloc::format!("histogram weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    /// Uniform histogram on `d` bins.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(domain("histogram must have at least one bin"));
        }
        Ok(Self(alloc::vec![1.0 / d as f64; d]))
    }

    /// Point mass on bin `k` of `d`.
    pub fn point_mass(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(domain("point mass index out of range"));
        }
        let mut w = alloc::vec![0.0; d];
        w[k] = 1.0;
        Ok(Self(w))
    }

    /// Used by solvers that produce marginals from a nonnegative plan; mass is
    /// checked but the caller owns the tolerance.
    pub(crate) fn from_marginal(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices with strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i).collect()
    }

    /// Shannon entropy in nats, with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.0)
    }
}

impl AsRef<[f64]> for Histogram {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `-sum p log p` over the positive entries of `p`.
pub fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * libm::log(x)).sum::<f64>()
}

/// Shannon entropy of a histogram in nats.
pub fn entropy(r: &Histogram) -> f64 {
    r.entropy()
}

/// Divides a nonnegative vector by its total mass.
pub fn normalize(raw: &[f64]) -> Result<Histogram> {
    if raw.is_empty() {
        return Err(domain("cannot normalize an empty vector"));
    }
    if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(domain("cannot normalize a vector with negative or non-finite entries"));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(domain("cannot normalize a vector with zero total mass"));
    }
    Ok(Histogram(raw.iter().map(|&x| x / sum).collect()))
}

/// Row-major flattening of an intensity grid followed by [`normalize`].
pub fn image_to_histogram(pixels: &Matrix) -> Result<Histogram> {
    if pixels.rows() == 0 || pixels.cols() == 0 {
        return Err(domain("image must be nonempty"));
    }
    normalize(pixels.as_slice())
}

/// Uniform draw from the simplex, deterministic in `seed`.
pub fn sample_simplex(d: usize, seed: u64) -> Result<Histogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_simplex_with(&mut rng, d)
}

/// Uniform draw from the simplex using normalized exponential spacings.
pub fn sample_simplex_with<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<Histogram> {
    if d == 0 {
        return Err(domain("simplex dimension must be at least 1"));
    }
    let draws: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    Ok(Histogram(draws.into_iter().map(|x| x / sum).collect()))
}
