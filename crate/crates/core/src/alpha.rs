//! Sinkhorn distance under a hard entropy constraint.
//!
//! The minimum of `<P, M>` over plans with mutual information at most
//! `alpha` is reached by the entropy-penalized optimum whose entropy equals
//! `h(r) + h(c) - alpha`. Plan entropy decreases monotonically in `lambda`,
//! so `lambda` is located by bracketing and bisection on `log lambda`.

use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::metric::CostMatrix;
use crate::sinkhorn::{gibbs_kernel, recover_plan, sinkhorn_with_kernel, SinkhornConfig};
use crate::transport::{plan_entropy, AlphaBall};

/// Kernel exponents are kept below this so `exp(-lambda m)` stays normal.
const MAX_EXPONENT: f64 = 690.0;

#[derive(Debug, Clone)]
pub struct AlphaConfig {
    /// Accepted `|h(P) - target|`, in nats.
    pub entropy_tolerance: f64,
    /// Sinkhorn tolerance on the iterate change for each bisection probe.
    pub inner_tolerance: f64,
    pub inner_max_iterations: usize,
    pub max_bisection_steps: usize,
    /// Largest `lambda` tried; defaults to `690 / max(M)`.
    pub lambda_ceiling: Option<f64>,
    /// Return the ceiling value (flagged) instead of failing when the target
    /// entropy is never reached.
    pub allow_boundary: bool,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            entropy_tolerance: 1e-4,
            inner_tolerance: 1e-9,
            inner_max_iterations: 1_000_000,
            max_bisection_steps: 200,
            lambda_ceiling: None,
            allow_boundary: true,
        }
    }
}

/// Which end of the `lambda` range produced the value, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// The target is (numerically) the independence table's entropy.
    Independence,
    /// The target was not reached below the `lambda` ceiling.
    LambdaCeiling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSolveReport {
    pub value: f64,
    /// `lambda` of the returned plan; zero for the independence table.
    pub lambda_star: f64,
    pub achieved_entropy: f64,
    pub target_entropy: f64,
    pub bisection_steps: usize,
    pub boundary: Option<Boundary>,
}

/// `h(r) + h(c) - alpha`: the least entropy a plan in the KL ball may have.
pub fn entropy_target(r: &Histogram, c: &Histogram, alpha: AlphaBall) -> f64 {
    r.entropy() + c.entropy() - alpha.alpha()
}

/// Sinkhorn distance `d_{M,alpha}(r, c)` with entropy tolerance `tol`.
pub fn sinkhorn_alpha(r: &Histogram, c: &Histogram, m: &CostMatrix, alpha: AlphaBall, tol: f64) -> Result<AlphaSolveReport> {
    sinkhorn_alpha_with(r, c, m, alpha, &AlphaConfig { entropy_tolerance: tol, ..AlphaConfig::default() })
}

struct Probe {
    lambda: f64,
    value: f64,
    entropy: f64,
}

pub fn sinkhorn_alpha_with(
    r: &Histogram,
    c: &Histogram,
    m: &CostMatrix,
    alpha: AlphaBall,
    cfg: &AlphaConfig,
) -> Result<AlphaSolveReport> {
    if !(cfg.entropy_tolerance > 0.0) {
        return Err(crate::error::domain("entropy tolerance must be positive"));
    }
    crate::error::ensure_dim(m.dim(), r.dim())?;
    crate::error::ensure_dim(m.dim(), c.dim())?;
    let target = entropy_target(r, c, alpha);
    let tol = cfg.entropy_tolerance;
    let independence = |steps| AlphaSolveReport {
        value: m.entries().bilinear(r.weights(), c.weights()),
        lambda_star: 0.0,
        achieved_entropy: r.entropy() + c.entropy(),
        target_entropy: target,
        bisection_steps: steps,
        boundary: Some(Boundary::Independence),
    };
    let finish = |p: &Probe, steps, boundary| AlphaSolveReport {
        value: p.value,
        lambda_star: p.lambda,
        achieved_entropy: p.entropy,
        target_entropy: target,
        bisection_steps: steps,
        boundary,
    };

    let scale = match (m.median_entry(), m.max_entry()) {
        (med, _) if med > 0.0 => med,
        (_, max) if max > 0.0 => max,
        // every plan costs zero
        _ => return Ok(independence(0)),
    };
    if alpha.alpha() == 0.0 {
        return Ok(independence(0));
    }
    let ceiling = cfg.lambda_ceiling.unwrap_or(MAX_EXPONENT / m.max_entry());

    let probe = |lambda: f64| -> Result<Probe> {
        let kernel = gibbs_kernel(m, lambda, r)?;
        let sk = SinkhornConfig::with_tolerance(lambda, cfg.inner_tolerance).max_iterations(cfg.inner_max_iterations);
        let res = sinkhorn_with_kernel(&kernel, r, c, &sk)?;
        let plan = recover_plan(&res, &kernel);
        Ok(Probe { lambda, value: res.divergence, entropy: plan_entropy(&plan) })
    };

    let mut steps = 0;
    let mut lo = probe(1e-4 / scale)?;
    steps += 1;
    if lo.entropy <= target + tol {
        return Ok(independence(steps));
    }

    // Grow lambda until the entropy drops to the target.
    let mut lambda = 1.0 / scale;
    let hi = loop {
        let lambda_now = lambda.min(ceiling);
        let p = match probe(lambda_now) {
            Ok(p) => p,
            Err(Error::KernelUnderflow { .. } | Error::NonFinite { .. }) => {
                return boundary(lo, target, steps, cfg, finish);
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        if (p.entropy - target).abs() <= tol {
            return Ok(finish(&p, steps, None));
        }
        if p.entropy < target {
            break p;
        }
        lo = p;
        if lambda_now >= ceiling {
            return boundary(lo, target, steps, cfg, finish);
        }
        lambda *= 2.0;
    };

    let mut hi = hi;
    while steps < cfg.max_bisection_steps && hi.lambda / lo.lambda > 1.0 + 1e-12 {
        let mid = probe(libm::sqrt(lo.lambda * hi.lambda))?;
        steps += 1;
        if (mid.entropy - target).abs() <= tol {
            return Ok(finish(&mid, steps, None));
        }
        if mid.entropy > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Bracket collapsed: the feasible end is the answer.
    Ok(finish(&lo, steps, None))
}

fn boundary(
    p: Probe,
    target: f64,
    steps: usize,
    cfg: &AlphaConfig,
    finish: impl Fn(&Probe, usize, Option<Boundary>) -> AlphaSolveReport,
) -> Result<AlphaSolveReport> {
    if cfg.allow_boundary {
        Ok(finish(&p, steps, Some(Boundary::LambdaCeiling)))
    } else {
        Err(Error::Unbracketed { target, lambda: p.lambda, entropy: p.entropy })
    }
}

/// `1_{r != c} d_{M,alpha}(r, c)`: zero on identical histograms, the
/// Sinkhorn distance otherwise.
pub fn coincidence_wrapped_distance(r: &Histogram, c: &Histogram, m: &CostMatrix, alpha: AlphaBall) -> Result<f64> {
    coincidence_wrapped_with(r, c, m, alpha, &AlphaConfig::default())
}

pub fn coincidence_wrapped_with(r: &Histogram, c: &Histogram, m: &CostMatrix, alpha: AlphaBall, cfg: &AlphaConfig) -> Result<f64> {
    if r.weights() == c.weights() {
        return Ok(0.0);
    }
    Ok(sinkhorn_alpha_with(r, c, m, alpha, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use core::f64::consts::LN_2;

    fn line(d: usize) -> CostMatrix {
        CostMatrix::new(Matrix::from_fn(d, d, |i, j| (i as f64 - j as f64).abs())).unwrap()
    }

    #[test]
    fn target_examples() {
        let h = Histogram::uniform(2).unwrap();
        assert!((entropy_target(&h, &h, AlphaBall::new(0.0).unwrap()) - 2.0 * LN_2).abs() < 1e-15);
        assert!(entropy_target(&h, &h, AlphaBall::new(2.0 * LN_2).unwrap()).abs() < 1e-15);
        assert!(entropy_target(&h, &h, AlphaBall::new(2.0).unwrap()) < 0.0);
    }

    #[test]
    fn alpha_zero_is_independence() {
        let r = Histogram::new(alloc::vec![0.2, 0.3, 0.5]).unwrap();
        let c = Histogram::new(alloc::vec![0.6, 0.1, 0.3]).unwrap();
        let m = line(3);
        let rep = sinkhorn_alpha(&r, &c, &m, AlphaBall::new(0.0).unwrap(), 1e-4).unwrap();
        assert_eq!(rep.boundary, Some(Boundary::Independence));
        assert!((rep.value - m.entries().bilinear(r.weights(), c.weights())).abs() < 1e-15);
    }

    #[test]
    fn interior_alpha_meets_target() {
        let r = Histogram::new(alloc::vec![0.2, 0.3, 0.5]).unwrap();
        let c = Histogram::new(alloc::vec![0.6, 0.1, 0.3]).unwrap();
        let alpha = AlphaBall::new(0.3).unwrap();
        let rep = sinkhorn_alpha(&r, &c, &line(3), alpha, 1e-6).unwrap();
        assert_eq!(rep.boundary, None);
        assert!((rep.achieved_entropy - rep.target_entropy).abs() <= 1e-6);
        assert!(rep.lambda_star > 0.0);
    }

    #[test]
    fn vacuous_constraint_hits_ceiling() {
        let r = Histogram::new(alloc::vec![0.2, 0.3, 0.5]).unwrap();
        let c = Histogram::new(alloc::vec![0.6, 0.1, 0.3]).unwrap();
        let alpha = AlphaBall::new(10.0).unwrap();
        let rep = sinkhorn_alpha(&r, &c, &line(3), alpha, 1e-4).unwrap();
        assert_eq!(rep.boundary, Some(Boundary::LambdaCeiling));
        let strict = AlphaConfig { allow_boundary: false, ..AlphaConfig::default() };
        assert!(matches!(sinkhorn_alpha_with(&r, &c, &line(3), alpha, &strict), Err(Error::Unbracketed { .. })));
    }

    #[test]
    fn wrapped_distance_coincidence() {
        let r = Histogram::uniform(3).unwrap();
        let alpha = AlphaBall::new(0.1).unwrap();
        assert_eq!(coincidence_wrapped_distance(&r, &r, &line(3), alpha).unwrap(), 0.0);
        let c = Histogram::point_mass(3, 0).unwrap();
        let direct = sinkhorn_alpha(&r, &c, &line(3), alpha, 1e-4).unwrap().value;
        assert_eq!(coincidence_wrapped_distance(&r, &c, &line(3), alpha).unwrap(), direct);
        // without the wrapper the self-distance is positive at small alpha
        assert!(sinkhorn_alpha(&r, &r, &line(3), alpha, 1e-4).unwrap().value > 0.0);
    }
}
