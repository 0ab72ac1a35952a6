//! Ground cost matrices: construction and metric-cone validation.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::linalg::{median, Matrix};

/// Slack allowed on the zero diagonal, symmetry and triangle checks.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Triangle checks are `O(d^3)`; above this size [`CostMatrix::into_validated`]
/// skips them and leaves the matrix unvalidated.
pub const VALIDATION_LIMIT: usize = 2048;

const MAX_REPORTED_VIOLATIONS: usize = 32;

/// Square nonnegative cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Matrix,
    validated_metric: bool,
}

impl CostMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(domain("cost matrix must be square"));
        }
        if entries.rows() == 0 {
            return Err(domain("cost matrix must be nonempty"));
        }
        if entries.as_slice().iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(domain("cost matrix entries must be finite and nonnegative"));
        }
        Ok(Self { entries, validated_metric: false })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Runs [`validate_metric_cone`] and records the result, failing if the
    /// matrix is not a metric. Matrices larger than [`VALIDATION_LIMIT`] are
    /// returned unchecked and unvalidated.
    pub fn into_validated(mut self) -> Result<Self> {
        if self.dim() > VALIDATION_LIMIT {
            return Ok(self);
        }
        let report = validate_metric_cone(&self.entries)?;
        if !report.pass {
            return Err(domain(alloc::format!("cost matrix is not a metric: {report:?}")));
        }
        self.validated_metric = true;
        Ok(self)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    #[inline]
    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    #[inline]
    pub fn is_validated_metric(&self) -> bool {
        self.validated_metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.as_slice().iter().copied().fold(0.0, f64::max)
    }

    /// Median of all `d^2` entries, diagonal included.
    pub fn median_entry(&self) -> f64 {
        median(self.entries.as_slice()).unwrap_or(0.0)
    }
}

/// One violated triangle inequality `m_ij > m_ik + m_kj`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `m_ij - (m_ik + m_kj)`
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub pass: bool,
    pub zero_diagonal: bool,
    pub symmetric: bool,
    /// Total number of violated triangle inequalities.
    pub triangle_violations: usize,
    /// The first few violations (capped).
    pub violations: Vec<TriangleViolation>,
}

/// Checks membership in the cone of distance matrices: zero diagonal,
/// symmetry and all `d^3` triangle inequalities, each within
/// [`METRIC_TOLERANCE`].
pub fn validate_metric_cone(m: &Matrix) -> Result<MetricReport> {
    if !m.is_square() {
        return Err(domain("metric validation needs a square matrix"));
    }
    let d = m.rows();
    let zero_diagonal = (0..d).all(|i| m[(i, i)].abs() <= METRIC_TOLERANCE);
    let symmetric = m.max_abs_asymmetry() <= METRIC_TOLERANCE;
    let mut violations = Vec::new();
    let mut count = 0;
    for i in 0..d {
        let row_i = m.row(i);
        for k in 0..d {
            let mik = row_i[k];
            let row_k = m.row(k);
            for j in 0..d {
                let excess = row_i[j] - (mik + row_k[j]);
                if excess > METRIC_TOLERANCE {
                    count += 1;
                    if violations.len() < MAX_REPORTED_VIOLATIONS {
                        violations.push(TriangleViolation { i, j, k, excess });
                    }
                }
            }
        }
    }
    Ok(MetricReport {
        pass: zero_diagonal && symmetric && count == 0,
        zero_diagonal,
        symmetric,
        triangle_violations: count,
        violations,
    })
}

/// Euclidean distances between the pixels of a `width x height` grid in
/// row-major order (pixel `y * width + x`).
pub fn grid_euclidean_metric(width: usize, height: usize) -> Result<CostMatrix> {
    if width == 0 || height == 0 {
        return Err(domain("grid must have at least one pixel"));
    }
    let n = width * height;
    let coords: Vec<(f64, f64)> = (0..n).map(|p| ((p % width) as f64, (p / width) as f64)).collect();
    let entries = Matrix::from_fn(n, n, |a, b| {
        let (dx, dy) = (coords[a].0 - coords[b].0, coords[a].1 - coords[b].1);
        libm::sqrt(dx * dx + dy * dy)
    });
    CostMatrix::new(entries)
}

/// Entrywise power `m_ij^a` for `a` in `(0, 1]`, with `0^a = 0`.
///
/// `t -> t^a` is concave and vanishes at zero, so metrics stay metrics and
/// the validation flag carries over.
pub fn power_transform(m: &CostMatrix, a: f64) -> Result<CostMatrix> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(domain(alloc::format!("power exponent must lie in (0, 1], got {a}")));
    }
    let entries = if a == 1.0 {
        m.entries.clone()
    } else {
        m.entries.map(|x| if x == 0.0 { 0.0 } else { libm::pow(x, a) })
    };
    Ok(CostMatrix { entries, validated_metric: m.validated_metric })
}

/// Pairwise Euclidean distances between `d` standard Gaussian points in
/// dimension `ceil(d / 10)`.
pub fn random_points_metric(d: usize, seed: u64) -> Result<CostMatrix> {
    if d < 2 {
        return Err(domain("random metric needs at least two points"));
    }
    let dim = d.div_ceil(10);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<f64> = (0..d * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut entries = Matrix::zeros(d, d);
    for a in 0..d {
        for b in (a + 1)..d {
            let pa = &points[a * dim..(a + 1) * dim];
            let pb = &points[b * dim..(b + 1) * dim];
            let sq: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
            let dist = libm::sqrt(sq);
            entries[(a, b)] = dist;
            entries[(b, a)] = dist;
        }
    }
    CostMatrix::new(entries)
}

/// Divides every entry by the median of all `d^2` entries.
///
/// The median includes the zero diagonal, as in `M / median(M(:))`. It is the
/// mean of the two central order statistics when `d^2` is even.
pub fn median_normalize(m: &CostMatrix) -> Result<CostMatrix> {
    let med = m.median_entry();
    if med <= 0.0 {
        return Err(domain("median of the cost entries is zero; cannot normalize"));
    }
    Ok(CostMatrix { entries: m.entries.map(|x| x / med), validated_metric: m.validated_metric })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_examples() {
        let ok = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(validate_metric_cone(&ok).unwrap().pass);

        let diag = Matrix::from_rows(&[[0.5, 1.0], [1.0, 0.0]]).unwrap();
        let rep = validate_metric_cone(&diag).unwrap();
        assert!(!rep.pass && !rep.zero_diagonal);

        let tri = Matrix::from_rows(&[[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]).unwrap();
        let rep = validate_metric_cone(&tri).unwrap();
        assert!(!rep.pass);
        // (1,3,2) in one-based indexing: m_13 = 3 > m_12 + m_23 = 2
        assert!(rep.violations.iter().any(|v| (v.i, v.j, v.k) == (0, 2, 1) && (v.excess - 1.0).abs() < 1e-15));

        let rect = Matrix::zeros(2, 3);
        assert!(validate_metric_cone(&rect).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = grid_euclidean_metric(2, 1).unwrap();
        assert_eq!(g.entries(), &Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());

        let g = grid_euclidean_metric(2, 2).unwrap();
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.get(0, 2), 1.0);
        assert!((g.get(0, 3) - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((g.get(1, 2) - core::f64::consts::SQRT_2).abs() < 1e-15);

        let g = grid_euclidean_metric(20, 20).unwrap();
        assert_eq!(g.dim(), 400);
        assert!((g.max_entry() - 26.870_06).abs() < 1e-5);
        assert!(g.into_validated().unwrap().is_validated_metric());

        assert!(grid_euclidean_metric(0, 3).is_err());
    }

    #[test]
    fn power_examples() {
        let m = CostMatrix::from_rows(&[[0.0, 4.0], [4.0, 0.0]]).unwrap();
        assert_eq!(power_transform(&m, 1.0).unwrap(), m);
        assert_eq!(power_transform(&m, 0.5).unwrap().entries(), &Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap());
        assert!(power_transform(&m, 0.0).is_err());
        assert!(power_transform(&m, 1.5).is_err());
    }

    #[test]
    fn random_points_examples() {
        for seed in 0..100 {
            let m = random_points_metric(20, seed).unwrap();
            for i in 0..20 {
                assert_eq!(m.get(i, i), 0.0);
                for j in 0..20 {
                    assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
            assert!(validate_metric_cone(m.entries()).unwrap().pass);
        }
        assert_eq!(random_points_metric(30, 5).unwrap(), random_points_metric(30, 5).unwrap());
        assert!(random_points_metric(1, 0).is_err());
    }

    #[test]
    fn median_normalize_examples() {
        let m = CostMatrix::from_rows(&[[0.0, 2.0, 4.0], [2.0, 0.0, 6.0], [4.0, 6.0, 0.0]]).unwrap();
        let n = median_normalize(&m).unwrap();
        let expect = Matrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]]).unwrap();
        assert_eq!(n.entries(), &expect);
        assert_eq!(n.median_entry(), 1.0);

        let scaled = CostMatrix::new(m.entries().map(|x| 3.5 * x)).unwrap();
        let ns = median_normalize(&scaled).unwrap();
        for (a, b) in ns.entries().as_slice().iter().zip(n.entries().as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        // idempotent
        assert_eq!(median_normalize(&n).unwrap(), n);

        // d = 2: entries {0, 0, 1, 1}, median 0.5 > 0 works; an all-zero matrix does not.
        assert!(median_normalize(&CostMatrix::new(Matrix::zeros(2, 2)).unwrap()).is_err());
    }
}
