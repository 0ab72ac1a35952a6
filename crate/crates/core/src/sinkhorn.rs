//! Dual-Sinkhorn divergence by Sinkhorn-Knopp matrix scaling.
//!
//! The entropy-penalized optimum `argmin <P, M> - h(P) / lambda` over the
//! transportation polytope is the unique matrix of the form
//! `diag(u) K diag(v)` with `K = exp(-lambda M)` and marginals `(r, c)`. The
//! solver iterates on `x = 1 ./ u` restricted to the support of `r`:
//!
//! ```text
//! x <- diag(1 ./ r) K (c ./ (K^T (1 ./ x)))
//! ```
//!
//! then sets `u = 1 ./ x`, `v = c ./ (K^T u)` and returns
//! `sum(u .* ((K .* M) v))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, ensure_dim, Error, Result};
use crate::histogram::Histogram;
use crate::linalg::{axpy, dot, gemm, Matrix, View};
use crate::metric::CostMatrix;
use crate::transport::TransportPlan;

/// Kernel entries below this value count as underflowed.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the Euclidean norm of the change in `x` is at most this.
    Tolerance(f64),
    /// Run exactly this many iterations.
    FixedIterations(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    pub lambda: f64,
    pub stop: StopRule,
    pub max_iterations: usize,
}

impl SinkhornConfig {
    pub const DEFAULT_TOLERANCE: f64 = 0.01;
    pub const DEFAULT_FIXED_ITERATIONS: usize = 20;
    pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

    /// Tolerance 0.01 on the iterate change.
    pub fn new(lambda: f64) -> Self {
        Self::with_tolerance(lambda, Self::DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(lambda: f64, tolerance: f64) -> Self {
        Self { lambda, stop: StopRule::Tolerance(tolerance), max_iterations: Self::DEFAULT_MAX_ITERATIONS }
    }

    /// A fixed iteration budget, as used for classification experiments.
    pub fn fixed(lambda: f64, iterations: usize) -> Self {
        Self { lambda, stop: StopRule::FixedIterations(iterations), max_iterations: iterations.max(1) }
    }

    pub fn max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(domain(alloc::format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        match self.stop {
            StopRule::Tolerance(t) if !(t > 0.0) => return Err(domain("tolerance must be positive")),
            StopRule::FixedIterations(0) => return Err(domain("fixed iteration count must be at least 1")),
            _ => {}
        }
        if self.max_iterations == 0 {
            return Err(domain("max_iterations must be at least 1"));
        }
        Ok(())
    }

    fn budget(&self) -> usize {
        match self.stop {
            StopRule::Tolerance(_) => self.max_iterations,
            StopRule::FixedIterations(n) => n.min(self.max_iterations),
        }
    }

    fn done(&self, delta: f64, iterations: usize) -> bool {
        match self.stop {
            StopRule::Tolerance(t) => delta <= t,
            StopRule::FixedIterations(n) => iterations >= n,
        }
    }
}

/// `exp(-lambda M)` restricted to the rows where `r` has mass, together with
/// `K .* M`.
#[derive(Debug, Clone)]
pub struct GibbsKernel {
    kernel: Matrix,
    weighted_cost: Matrix,
    support: Vec<usize>,
    lambda: f64,
}

impl GibbsKernel {
    /// `|support| x d` kernel.
    pub fn entries(&self) -> &Matrix {
        &self.kernel
    }

    /// `K .* M` on the same rows.
    pub fn weighted_cost(&self) -> &Matrix {
        &self.weighted_cost
    }

    /// Indices of the rows of `M` kept in the kernel.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Full histogram dimension.
    pub fn dim(&self) -> usize {
        self.kernel.cols()
    }
}

/// Builds the Gibbs kernel on the support of `r`.
pub fn gibbs_kernel(m: &CostMatrix, lambda: f64, r: &Histogram) -> Result<GibbsKernel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(alloc::format!("lambda must be positive and finite, got {lambda}")));
    }
    let d = m.dim();
    ensure_dim(d, r.dim())?;
    let support = r.support();
    let kernel = Matrix::from_fn(support.len(), d, |a, j| libm::exp(-lambda * m.get(support[a], j)));
    for j in 0..d {
        let col_max = (0..support.len()).map(|a| kernel[(a, j)]).fold(0.0, f64::max);
        if col_max < UNDERFLOW_THRESHOLD {
            let min_cost = support.iter().map(|&i| m.get(i, j)).fold(f64::INFINITY, f64::min);
            return Err(Error::KernelUnderflow { lambda, column: j, exponent: lambda * min_cost });
        }
    }
    let weighted_cost = Matrix::from_fn(support.len(), d, |a, j| kernel[(a, j)] * m.get(support[a], j));
    Ok(GibbsKernel { kernel, weighted_cost, support, lambda })
}

/// Converged scaling of one histogram pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// Row scaling on the kernel support (`u = 1 ./ x`).
    pub u: Vec<f64>,
    /// Column scaling over all `d` bins; zero where `c` has no mass.
    pub v: Vec<f64>,
    pub divergence: f64,
    pub iterations: usize,
    /// Whether the stop rule was met within `max_iterations`.
    pub converged: bool,
    /// `max_i |(diag(u) K v)_i - r_i|` at exit.
    pub row_violation: f64,
}

/// Dual-Sinkhorn divergence between `r` and `c`.
pub fn sinkhorn_divergence(r: &Histogram, c: &Histogram, m: &CostMatrix, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    cfg.validate()?;
    let kernel = gibbs_kernel(m, cfg.lambda, r)?;
    sinkhorn_with_kernel(&kernel, r, c, cfg)
}

/// Same as [`sinkhorn_divergence`] with a prebuilt kernel for `r`.
pub fn sinkhorn_with_kernel(kernel: &GibbsKernel, r: &Histogram, c: &Histogram, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    cfg.validate()?;
    check_kernel(kernel, r, cfg)?;
    ensure_dim(kernel.dim(), c.dim())?;
    let r_sup: Vec<f64> = kernel.support.iter().map(|&i| r.weights()[i]).collect();
    let cols = c.support();
    let c_sup: Vec<f64> = cols.iter().map(|&j| c.weights()[j]).collect();

    // Columns without mass have v_j = 0 and drop out of every product.
    let compact;
    let (k, km) = if cols.len() == kernel.dim() {
        (&kernel.kernel, &kernel.weighted_cost)
    } else {
        compact = (select_cols(&kernel.kernel, &cols), select_cols(&kernel.weighted_cost, &cols));
        (&compact.0, &compact.1)
    };

    let n_rows = r_sup.len();
    let mut x = vec![1.0 / n_rows as f64; n_rows];
    let mut u = vec![0.0; n_rows];
    let mut ktu = vec![0.0; cols.len()];
    let mut x_next = vec![0.0; n_rows];
    let mut iterations = 0;
    let mut converged = false;
    let budget = cfg.budget();
    while iterations < budget {
        for (ui, xi) in u.iter_mut().zip(&x) {
            *ui = 1.0 / xi;
        }
        tr_mul_into(k, &u, &mut ktu);
        for (t, cj) in ktu.iter_mut().zip(&c_sup) {
            *t = cj / *t;
        }
        let mut delta_sq = 0.0;
        let mut finite = true;
        for a in 0..n_rows {
            let xn = dot(k.row(a), &ktu) / r_sup[a];
            finite &= xn.is_finite() && xn > 0.0;
            let diff = xn - x[a];
            delta_sq += diff * diff;
            x_next[a] = xn;
        }
        iterations += 1;
        if !finite {
            return Err(Error::NonFinite { lambda: kernel.lambda, iteration: iterations });
        }
        core::mem::swap(&mut x, &mut x_next);
        if cfg.done(libm::sqrt(delta_sq), iterations) {
            converged = true;
            break;
        }
    }

    let u: Vec<f64> = x.iter().map(|xi| 1.0 / xi).collect();
    tr_mul_into(k, &u, &mut ktu);
    let v_sup: Vec<f64> = c_sup.iter().zip(&ktu).map(|(cj, t)| cj / t).collect();
    let divergence: f64 = (0..n_rows).map(|a| u[a] * dot(km.row(a), &v_sup)).sum();
    let row_violation = (0..n_rows).map(|a| (u[a] * dot(k.row(a), &v_sup) - r_sup[a]).abs()).fold(0.0, f64::max);
    if !divergence.is_finite() {
        return Err(Error::NonFinite { lambda: kernel.lambda, iteration: iterations });
    }
    let mut v = vec![0.0; kernel.dim()];
    for (&j, &vj) in cols.iter().zip(&v_sup) {
        v[j] = vj;
    }
    Ok(SinkhornResult { u, v, divergence, iterations, converged, row_violation })
}

fn check_kernel(kernel: &GibbsKernel, r: &Histogram, cfg: &SinkhornConfig) -> Result<()> {
    ensure_dim(kernel.dim(), r.dim())?;
    if kernel.support != r.support() {
        return Err(domain("Gibbs kernel was built for a histogram with a different support"));
    }
    if kernel.lambda != cfg.lambda {
        return Err(domain("Gibbs kernel lambda differs from the configured lambda"));
    }
    Ok(())
}

fn select_cols(m: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.rows(), cols.len(), |i, j| m[(i, cols[j])])
}

fn tr_mul_into(k: &Matrix, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (a, &ua) in u.iter().enumerate() {
        axpy(ua, k.row(a), out);
    }
}

/// Divergences between `r` and every histogram in `columns`.
///
/// Columns are iterated together as one block through matrix-matrix
/// products. A column stops updating as soon as it meets the stop rule, so
/// each result follows the same iterate sequence as a separate
/// [`sinkhorn_divergence`] call; the block runs until every column has
/// stopped. Per-column numerical failures are returned in place.
pub fn sinkhorn_batch(
    r: &Histogram,
    columns: &[Histogram],
    m: &CostMatrix,
    cfg: &SinkhornConfig,
) -> Result<Vec<Result<SinkhornResult>>> {
    cfg.validate()?;
    let kernel = gibbs_kernel(m, cfg.lambda, r)?;
    sinkhorn_batch_with_kernel(&kernel, r, columns, cfg)
}

pub fn sinkhorn_batch_with_kernel(
    kernel: &GibbsKernel,
    r: &Histogram,
    columns: &[Histogram],
    cfg: &SinkhornConfig,
) -> Result<Vec<Result<SinkhornResult>>> {
    cfg.validate()?;
    check_kernel(kernel, r, cfg)?;
    for c in columns {
        ensure_dim(kernel.dim(), c.dim())?;
    }
    if columns.len() == 1 {
        return Ok(vec![sinkhorn_with_kernel(kernel, r, &columns[0], cfg)]);
    }
    let (rows, d, n) = (kernel.support.len(), kernel.dim(), columns.len());
    let k = kernel.kernel.as_slice();
    let r_sup: Vec<f64> = kernel.support.iter().map(|&i| r.weights()[i]).collect();

    // Column-major blocks: column `a` of X lives at x[a * rows..(a + 1) * rows].
    let mut x = vec![1.0 / rows as f64; rows * n];
    let mut iterations = vec![0usize; n];
    let mut status: Vec<Option<Result<bool>>> = vec![None; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut u_blk = Vec::new();
    let mut c_blk = Vec::new();
    let mut t_blk = Vec::new();
    let mut x_blk = Vec::new();
    let budget = cfg.budget();

    while !active.is_empty() {
        let na = active.len();
        u_blk.clear();
        c_blk.clear();
        for &col in &active {
            u_blk.extend(x[col * rows..(col + 1) * rows].iter().map(|xi| 1.0 / xi));
            c_blk.extend_from_slice(columns[col].weights());
        }
        // T = K^T U  (d x na); every column starts from the same iterate
        t_blk.resize(d * na, 0.0);
        if iterations[active[0]] == 0 {
            let mut shared = vec![0.0; d];
            tr_mul_into(&kernel.kernel, &u_blk[..rows], &mut shared);
            for blk in t_blk.chunks_exact_mut(d) {
                blk.copy_from_slice(&shared);
            }
        } else {
            gemm(d, rows, na, View { data: k, row_stride: 1, col_stride: d }, View::col_major(&u_blk, rows), &mut t_blk, 1, d);
        }
        for (t, cj) in t_blk.iter_mut().zip(&c_blk) {
            *t = if *cj == 0.0 { 0.0 } else { cj / *t };
        }
        // X' = diag(1 ./ r) K W  (rows x na)
        x_blk.resize(rows * na, 0.0);
        gemm(rows, d, na, View::row_major(k, d), View::col_major(&t_blk, d), &mut x_blk, 1, rows);

        let mut still = Vec::with_capacity(na);
        for (slot, &col) in active.iter().enumerate() {
            let xs = &mut x_blk[slot * rows..(slot + 1) * rows];
            let mut finite = true;
            let mut delta_sq = 0.0;
            for (a, xn) in xs.iter_mut().enumerate() {
                *xn /= r_sup[a];
                finite &= xn.is_finite() && *xn > 0.0;
                let diff = *xn - x[col * rows + a];
                delta_sq += diff * diff;
            }
            iterations[col] += 1;
            if !finite {
                status[col] = Some(Err(Error::NonFinite { lambda: kernel.lambda, iteration: iterations[col] }));
                continue;
            }
            x[col * rows..(col + 1) * rows].copy_from_slice(xs);
            if cfg.done(libm::sqrt(delta_sq), iterations[col]) {
                status[col] = Some(Ok(true));
            } else if iterations[col] >= budget {
                status[col] = Some(Ok(false));
            } else {
                still.push(col);
            }
        }
        active = still;
    }

    // Final scalings for every column in one pass.
    let u_all: Vec<f64> = x.iter().map(|xi| 1.0 / xi).collect();
    let mut v_all = vec![0.0; d * n];
    gemm(d, rows, n, View { data: k, row_stride: 1, col_stride: d }, View::col_major(&u_all, rows), &mut v_all, 1, d);
    for (col, c) in columns.iter().enumerate() {
        for (vj, cj) in v_all[col * d..(col + 1) * d].iter_mut().zip(c.weights()) {
            *vj = if *cj == 0.0 { 0.0 } else { cj / *vj };
        }
    }
    let mut cost_v = vec![0.0; rows * n];
    gemm(rows, d, n, View::row_major(kernel.weighted_cost.as_slice(), d), View::col_major(&v_all, d), &mut cost_v, 1, rows);
    let mut kv = vec![0.0; rows * n];
    gemm(rows, d, n, View::row_major(k, d), View::col_major(&v_all, d), &mut kv, 1, rows);

    let out = status
        .into_iter()
        .enumerate()
        .map(|(col, st)| {
            let converged = st.expect("every column reaches a terminal state")?;
            let u = u_all[col * rows..(col + 1) * rows].to_vec();
            let divergence = dot(&u, &cost_v[col * rows..(col + 1) * rows]);
            if !divergence.is_finite() {
                return Err(Error::NonFinite { lambda: kernel.lambda, iteration: iterations[col] });
            }
            let row_violation = (0..rows).map(|a| (u[a] * kv[col * rows + a] - r_sup[a]).abs()).fold(0.0, f64::max);
            Ok(SinkhornResult {
                u,
                v: v_all[col * d..(col + 1) * d].to_vec(),
                divergence,
                iterations: iterations[col],
                converged,
                row_violation,
            })
        })
        .collect();
    Ok(out)
}

/// `diag(u) K diag(v)` expanded back to `d x d` with zero rows off the
/// support of `r`.
pub fn recover_plan(result: &SinkhornResult, kernel: &GibbsKernel) -> TransportPlan {
    let d = kernel.dim();
    let mut p = Matrix::zeros(d, d);
    for (a, &i) in kernel.support.iter().enumerate() {
        let ua = result.u[a];
        for ((pij, &kij), &vj) in p.row_mut(i).iter_mut().zip(kernel.kernel.row(a)).zip(&result.v) {
            *pij = ua * kij * vj;
        }
    }
    TransportPlan::from_entries_unchecked(p)
}
