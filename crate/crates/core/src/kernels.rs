//! The independence kernel `r^T M c`, classical histogram distances, and
//! kernel matrices built from distances.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{domain, ensure_dim, Error, Result};
use crate::histogram::Histogram;
use crate::linalg::{dot, quantile_sorted, symmetric_eigen, Matrix, PivotedCholesky};
use crate::metric::CostMatrix;

/// Negative centered-Gram eigenvalues beyond `-EDM_TOLERANCE * max|eig|`
/// mean the cost matrix is not Euclidean.
pub const EDM_TOLERANCE: f64 = 1e-6;
/// Relative pivot threshold of the Gram factorization.
const CHOLESKY_TOLERANCE: f64 = 1e-15;
/// Target floor for the smallest eigenvalue of a regularized kernel matrix.
pub const PSD_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// `sum (sqrt r_i - sqrt c_i)^2`
    Hellinger,
    /// `sum (r_i - c_i)^2 / (r_i + c_i)`, with `0/0 = 0`
    ChiSquared,
    /// `1/2 sum |r_i - c_i|`
    TotalVariation,
    /// `sum (r_i - c_i)^2`
    SquaredEuclidean,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::Hellinger, BaselineKind::ChiSquared, BaselineKind::TotalVariation, BaselineKind::SquaredEuclidean];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Hellinger => "hellinger",
            BaselineKind::ChiSquared => "chi2",
            BaselineKind::TotalVariation => "tv",
            BaselineKind::SquaredEuclidean => "sqeuclid",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hellinger" => Ok(BaselineKind::Hellinger),
            "chi2" | "chi_squared" => Ok(BaselineKind::ChiSquared),
            "tv" | "total_variation" => Ok(BaselineKind::TotalVariation),
            "sqeuclid" | "squared_euclidean" => Ok(BaselineKind::SquaredEuclidean),
            other => Err(domain(alloc::format!("unknown baseline distance `{other}`"))),
        }
    }
}

pub fn baseline_distance(kind: BaselineKind, r: &Histogram, c: &Histogram) -> Result<f64> {
    ensure_dim(r.dim(), c.dim())?;
    let pairs = r.weights().iter().zip(c.weights());
    Ok(match kind {
        BaselineKind::Hellinger => pairs
            .map(|(&a, &b)| {
                let diff = libm::sqrt(a) - libm::sqrt(b);
                diff * diff
            })
            .sum(),
        BaselineKind::ChiSquared => pairs
            .map(|(&a, &b)| {
                let s = a + b;
                if s == 0.0 {
                    0.0
                } else {
                    (a - b) * (a - b) / s
                }
            })
            .sum(),
        BaselineKind::TotalVariation => 0.5 * pairs.map(|(a, b)| (a - b).abs()).sum::<f64>(),
        BaselineKind::SquaredEuclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum(),
    })
}

/// `r^T M c`, the Sinkhorn distance at `alpha = 0`.
pub fn independence_kernel_distance(r: &Histogram, c: &Histogram, m: &CostMatrix) -> Result<f64> {
    ensure_dim(m.dim(), r.dim())?;
    ensure_dim(m.dim(), c.dim())?;
    Ok(m.entries().bilinear(r.weights(), c.weights()))
}

/// Embedding of an EDM cost matrix for fast independence-kernel evaluation:
/// `r^T M c = r^T u + c^T u - 2 (F r)^T (F c)` with `K = F^T F` the Gram
/// matrix of the embedded points and `u = diag(K)`.
#[derive(Debug, Clone)]
pub struct IndependenceKernelPrecompute {
    norms_u: Vec<f64>,
    cholesky: PivotedCholesky,
}

/// A histogram mapped through an [`IndependenceKernelPrecompute`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedHistogram {
    /// `F r`
    pub projected: Vec<f64>,
    /// `r^T u`
    pub norm_term: f64,
}

impl IndependenceKernelPrecompute {
    pub fn norms(&self) -> &[f64] {
        &self.norms_u
    }

    /// The pivoted Cholesky factor of the Gram matrix.
    pub fn cholesky(&self) -> &PivotedCholesky {
        &self.cholesky
    }

    pub fn rank(&self) -> usize {
        self.cholesky.rank
    }

    /// `L L^T` in the original ordering.
    pub fn gram(&self) -> Matrix {
        self.cholesky.reconstruct()
    }

    pub fn project(&self, r: &Histogram) -> Result<ProjectedHistogram> {
        ensure_dim(self.norms_u.len(), r.dim())?;
        Ok(ProjectedHistogram { projected: self.cholesky.project(r.weights()), norm_term: dot(r.weights(), &self.norms_u) })
    }

    pub fn project_all(&self, hs: &[Histogram]) -> Result<Vec<ProjectedHistogram>> {
        hs.iter().map(|h| self.project(h)).collect()
    }

    pub fn distance(&self, a: &ProjectedHistogram, b: &ProjectedHistogram) -> f64 {
        a.norm_term + b.norm_term - 2.0 * dot(&a.projected, &b.projected)
    }
}

/// Recovers a Gram matrix from an EDM by double centering,
/// `K = -1/2 J M J`, clips round-off negative eigenvalues and factors it.
pub fn independence_precompute(m: &CostMatrix) -> Result<IndependenceKernelPrecompute> {
    let d = m.dim();
    let e = m.entries();
    let row_means: Vec<f64> = (0..d).map(|i| e.row(i).iter().sum::<f64>() / d as f64).collect();
    let col_means: Vec<f64> = e.col_sums().into_iter().map(|s| s / d as f64).collect();
    let grand = row_means.iter().sum::<f64>() / d as f64;
    let centered = Matrix::from_fn(d, d, |i, j| -0.5 * (e[(i, j)] - row_means[i] - col_means[j] + grand));

    let (values, vectors) = symmetric_eigen(&centered);
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let min = values.first().copied().unwrap_or(0.0);
    if min < -EDM_TOLERANCE * scale {
        return Err(Error::NotEuclidean { min_eigenvalue: min });
    }
    let mut gram = Matrix::zeros(d, d);
    for (k, &lam) in values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..d {
            let vik = lam * vectors[(i, k)];
            if vik == 0.0 {
                continue;
            }
            for (g, j) in gram.row_mut(i).iter_mut().zip(0..d) {
                *g += vik * vectors[(j, k)];
            }
        }
    }
    // symmetrize the accumulated round-off
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            gram[(i, j)] = avg;
            gram[(j, i)] = avg;
        }
    }
    let cholesky = PivotedCholesky::new(&gram, CHOLESKY_TOLERANCE)?;
    let norms_u = (0..d)
        .map(|i| {
            let pos = cholesky.perm.iter().position(|&p| p == i).expect("permutation covers every index");
            dot(cholesky.factor.row(pos), cholesky.factor.row(pos))
        })
        .collect();
    Ok(IndependenceKernelPrecompute { norms_u, cholesky })
}

/// Kernel `exp(-d_ij / t)` over a distance matrix, with a diagonal shift
/// when needed to make it positive semidefinite.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub entries: Matrix,
    pub bandwidth_t: f64,
    /// Amount added to the diagonal (zero when already PSD).
    pub diagonal_regularizer: f64,
}

pub fn kernel_matrix(distances: &Matrix, t: f64) -> Result<KernelMatrix> {
    if !distances.is_square() {
        return Err(domain("distance matrix must be square"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(alloc::format!("bandwidth must be positive, got {t}")));
    }
    let n = distances.rows();
    let scale = distances.as_slice().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if distances.max_abs_asymmetry() > 1e-12 * scale.max(1.0) {
        return Err(domain("distance matrix must be symmetric"));
    }
    let mut entries = Matrix::from_fn(n, n, |i, j| libm::exp(-0.5 * (distances[(i, j)] + distances[(j, i)]) / t));
    let min = crate::linalg::min_eigenvalue(&entries);
    let mut shift = 0.0;
    if min < -PSD_FLOOR {
        shift = -min + PSD_FLOOR;
        for i in 0..n {
            entries[(i, i)] += shift;
        }
    }
    Ok(KernelMatrix { entries, bandwidth_t: t, diagonal_regularizer: shift })
}

/// Candidate bandwidths `{1, q10, q20, q50}` from a sample of distances
/// (linearly interpolated quantiles).
pub fn bandwidth_grid(sample: &[f64]) -> Result<[f64; 4]> {
    if sample.is_empty() {
        return Err(domain("bandwidth grid needs at least one distance"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok([1.0, quantile_sorted(&v, 0.1), quantile_sorted(&v, 0.2), quantile_sorted(&v, 0.5)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_support_values() {
        let r = Histogram::point_mass(2, 0).unwrap();
        let c = Histogram::point_mass(2, 1).unwrap();
        let got: Vec<f64> = BaselineKind::ALL.iter().map(|&k| baseline_distance(k, &r, &c).unwrap()).collect();
        assert_eq!(got, alloc::vec![2.0, 2.0, 1.0, 2.0]);
        for k in BaselineKind::ALL {
            assert_eq!(baseline_distance(k, &r, &r).unwrap(), 0.0);
            assert_eq!(k.name().parse::<BaselineKind>().unwrap(), k);
        }
        assert!(baseline_distance(BaselineKind::Hellinger, &r, &Histogram::uniform(3).unwrap()).is_err());
        assert!("cosine".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn independence_kernel_value() {
        let h = Histogram::uniform(2).unwrap();
        let m = CostMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(independence_kernel_distance(&h, &h, &m).unwrap(), 0.5);
    }

    #[test]
    fn non_euclidean_matrix_is_rejected() {
        // violates the triangle inequality badly, so it cannot be an EDM
        let m = CostMatrix::from_rows(&[[0.0, 1.0, 9.0], [1.0, 0.0, 1.0], [9.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(independence_precompute(&m), Err(Error::NotEuclidean { .. })));
    }

    #[test]
    fn bandwidth_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let g = bandwidth_grid(&v).unwrap();
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 10.9).abs() < 1e-12);
        assert!((g[2] - 20.8).abs() < 1e-12);
        assert!((g[3] - 50.5).abs() < 1e-12);
        assert_eq!(bandwidth_grid(&[5.0, 5.0, 5.0]).unwrap(), [1.0, 5.0, 5.0, 5.0]);
        assert_eq!(bandwidth_grid(&[3.0]).unwrap(), [1.0, 3.0, 3.0, 3.0]);
        assert!(bandwidth_grid(&[]).is_err());
    }

    #[test]
    fn kernel_matrix_examples() {
        let k = kernel_matrix(&Matrix::zeros(3, 3), 1.0).unwrap();
        assert!(k.entries.as_slice().iter().all(|&x| x == 1.0));
        assert_eq!(k.diagonal_regularizer, 0.0);
        let asym = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(kernel_matrix(&asym, 1.0).is_err());
        assert!(kernel_matrix(&Matrix::zeros(2, 2), 0.0).is_err());
    }
}
