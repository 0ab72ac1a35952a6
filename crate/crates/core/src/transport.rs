//! Transport plans (joint distributions with fixed marginals) and the
//! entropy identities relating them to their marginals.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, ensure_dim, Result};
use crate::histogram::{entropy_of, Histogram};
use crate::linalg::Matrix;

/// Tolerance on the total mass and marginal checks of a plan.
pub const PLAN_TOLERANCE: f64 = 1e-9;

/// Nonnegative matrix of total mass one, with its marginals cached.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Matrix,
    row_marginal: Histogram,
    col_marginal: Histogram,
}

impl TransportPlan {
    /// Validates `entries` and computes its marginals.
    pub fn new(entries: Matrix) -> Result<Self> {
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(domain("transport plan must be nonempty"));
        }
        if entries.as_slice().iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(domain("transport plan entries must be finite and nonnegative"));
        }
        let mass: f64 = entries.as_slice().iter().sum();
        if (mass - 1.0).abs() > PLAN_TOLERANCE {
            return Err(domain(format!("transport plan has total mass {mass}, not 1")));
        }
        Ok(Self::from_entries_unchecked(entries))
    }

    /// Like [`TransportPlan::new`], additionally requiring the marginals to
    /// match `r` and `c` within [`PLAN_TOLERANCE`].
    pub fn with_marginals(entries: Matrix, r: &Histogram, c: &Histogram) -> Result<Self> {
        ensure_dim(r.dim(), entries.rows())?;
        ensure_dim(c.dim(), entries.cols())?;
        let plan = Self::new(entries)?;
        let viol = plan.marginal_violation(r, c);
        if viol > PLAN_TOLERANCE {
            return Err(domain(format!("plan marginals deviate from (r, c) by {viol:e}")));
        }
        Ok(plan)
    }

    pub(crate) fn from_entries_unchecked(entries: Matrix) -> Self {
        let row_marginal = Histogram::from_marginal(entries.row_sums());
        let col_marginal = Histogram::from_marginal(entries.col_sums());
        Self { entries, row_marginal, col_marginal }
    }

    #[inline]
    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    #[inline]
    pub fn row_marginal(&self) -> &Histogram {
        &self.row_marginal
    }

    #[inline]
    pub fn col_marginal(&self) -> &Histogram {
        &self.col_marginal
    }

    /// Largest absolute deviation of the marginals from `(r, c)`.
    pub fn marginal_violation(&self, r: &Histogram, c: &Histogram) -> f64 {
        let rows = self.row_marginal.weights().iter().zip(r.weights());
        let cols = self.col_marginal.weights().iter().zip(c.weights());
        rows.chain(cols).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `<P, M>`.
    pub fn cost(&self, m: &Matrix) -> f64 {
        self.entries.frobenius_dot(m)
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.entries.as_slice().iter().filter(|&&p| p > 0.0).count()
    }

    pub fn entropy(&self) -> f64 {
        plan_entropy(self)
    }

    pub fn mutual_information(&self) -> f64 {
        mutual_information(self)
    }
}

/// KL-ball radius `alpha >= 0` around the independence table, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaBall(f64);

impl AlphaBall {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(domain(format!("alpha must be nonnegative, got {alpha}")));
        }
        Ok(Self(alpha))
    }

    #[inline]
    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// The outer product `r c^T`.
pub fn independence_table(r: &Histogram, c: &Histogram) -> TransportPlan {
    let (rw, cw) = (r.weights(), c.weights());
    let entries = Matrix::from_fn(rw.len(), cw.len(), |i, j| rw[i] * cw[j]);
    TransportPlan { entries, row_marginal: r.clone(), col_marginal: c.clone() }
}

/// Joint entropy `-sum p_ij log p_ij` in nats.
pub fn plan_entropy(p: &TransportPlan) -> f64 {
    entropy_of(p.entries.as_slice())
}

/// `KL(P || Q) = sum p_ij log(p_ij / q_ij)` over the positive entries of `P`;
/// infinite when `P` charges a zero of `Q`.
pub fn kl_divergence(p: &Matrix, q: &Matrix) -> f64 {
    let mut acc = 0.0;
    for (&pij, &qij) in p.as_slice().iter().zip(q.as_slice()) {
        if pij > 0.0 {
            if qij <= 0.0 {
                return f64::INFINITY;
            }
            acc += pij * (libm::log(pij) - libm::log(qij));
        }
    }
    acc
}

/// Mutual information of the plan, `KL(P || r c^T)` with `r, c` its own
/// marginals. Only positive entries contribute.
pub fn mutual_information(p: &TransportPlan) -> f64 {
    let log_r: Vec<f64> = p.row_marginal.weights().iter().map(|&x| safe_log(x)).collect();
    let log_c: Vec<f64> = p.col_marginal.weights().iter().map(|&x| safe_log(x)).collect();
    let mut acc = 0.0;
    for (i, lr) in log_r.iter().enumerate() {
        for (&pij, lc) in p.entries.row(i).iter().zip(&log_c) {
            if pij > 0.0 {
                acc += pij * (libm::log(pij) - lr - lc);
            }
        }
    }
    // The sum is a KL divergence; tiny negative values are round-off.
    acc.max(0.0)
}

fn safe_log(x: f64) -> f64 {
    if x > 0.0 {
        libm::log(x)
    } else {
        0.0
    }
}

/// Membership in `U_alpha`: mutual information at most `alpha` (+1e-9).
pub fn in_alpha_ball(p: &TransportPlan, alpha: AlphaBall) -> bool {
    mutual_information(p) <= alpha.alpha() + PLAN_TOLERANCE
}

/// Composes `P` over `(x, y)` with `Q` over `(y, z)` into
/// `s_ik = sum_j p_ij q_jk / y_j`, skipping bins with `y_j = 0`.
pub fn glue(p: &TransportPlan, q: &TransportPlan) -> Result<TransportPlan> {
    let y = p.col_marginal.weights();
    ensure_dim(y.len(), q.entries.rows())?;
    let gap = y.iter().zip(q.row_marginal.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > PLAN_TOLERANCE {
        return Err(domain(format!("shared marginals disagree by {gap:e}")));
    }
    let inv_y: Vec<f64> = y.iter().map(|&w| if w > 0.0 { 1.0 / w } else { 0.0 }).collect();
    let mut scaled = p.entries.clone();
    for i in 0..scaled.rows() {
        for (s, iy) in scaled.row_mut(i).iter_mut().zip(&inv_y) {
            *s *= iy;
        }
    }
    let s = scaled.matmul(&q.entries);
    Ok(TransportPlan::from_entries_unchecked(s))
}
