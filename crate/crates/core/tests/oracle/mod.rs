//! Reference solvers that share no code with the library.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

/// Exact transport cost by enumerating every spanning tree of the
/// bipartite graph (each basis of the transportation LP), solving its flows
/// and keeping the cheapest feasible one. Only meant for tiny problems.
pub fn brute_force_emd(r: &[f64], c: &[f64], m: &[Vec<f64>]) -> f64 {
    let (rows, cols) = (r.len(), c.len());
    let cells: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    let need = rows + cols - 1;
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(need);
    subsets(&cells, need, 0, &mut pick, &mut |basis| {
        if let Some(flows) = tree_flows(r, c, basis) {
            if flows.iter().all(|&f| f >= -1e-14) {
                let cost: f64 = basis.iter().zip(&flows).map(|(&(i, j), f)| f * m[i][j]).sum();
                best = best.min(cost);
            }
        }
    });
    best
}

fn subsets<T: Copy>(items: &[T], k: usize, start: usize, pick: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for idx in start..items.len() {
        if items.len() - idx < k - pick.len() {
            break;
        }
        pick.push(items[idx]);
        subsets(items, k, idx + 1, pick, f);
        pick.pop();
    }
}

/// Flows on a candidate basis by repeatedly peeling leaves, or `None` if
/// the cells do not form a spanning tree.
fn tree_flows(r: &[f64], c: &[f64], basis: &[(usize, usize)]) -> Option<Vec<f64>> {
    let rows = r.len();
    let mut residual: Vec<f64> = r.iter().chain(c).copied().collect();
    let mut alive = vec![true; basis.len()];
    let mut flows = vec![0.0; basis.len()];
    let node = |cell: (usize, usize)| [cell.0, rows + cell.1];
    for _ in 0..basis.len() {
        let mut degree = vec![0usize; residual.len()];
        for (e, &cell) in basis.iter().enumerate() {
            if alive[e] {
                for v in node(cell) {
                    degree[v] += 1;
                }
            }
        }
        let (e, leaf) = basis
            .iter()
            .enumerate()
            .filter(|&(e, _)| alive[e])
            .find_map(|(e, &cell)| node(cell).into_iter().find(|&v| degree[v] == 1).map(|v| (e, v)))?;
        let f = residual[leaf];
        flows[e] = f;
        alive[e] = false;
        for v in node(basis[e]) {
            residual[v] -= f;
        }
    }
    // a spanning tree leaves every node balanced
    if residual.iter().all(|x| x.abs() < 1e-12) {
        Some(flows)
    } else {
        None
    }
}

/// Transport cost on a line with `m_ij = |i - j|`: the L1 distance between
/// cumulative distributions.
pub fn line_emd(r: &[f64], c: &[f64]) -> f64 {
    let (mut cr, mut cc, mut total) = (0.0, 0.0, 0.0);
    for k in 0..r.len() - 1 {
        cr += r[k];
        cc += c[k];
        total += (cr - cc).abs();
    }
    total
}

/// Entropy-regularized transport `min <P, M> - h(P) / lambda` through
/// Newton's method on the smooth dual
/// `max f.r + g.c - 1/lambda sum exp(lambda (f_i + g_j - m_ij) - 1)`.
/// Returns `(<P, M>, P)`. Histograms must be strictly positive.
pub fn entropic_dual_newton(r: &[f64], c: &[f64], m: &[Vec<f64>], lambda: f64) -> (f64, Vec<Vec<f64>>) {
    let (a, b) = (r.len(), c.len());
    let n = a + b;
    let plan = |x: &[f64]| -> Vec<Vec<f64>> {
        (0..a).map(|i| (0..b).map(|j| (lambda * (x[i] + x[a + j] - m[i][j]) - 1.0).exp()).collect()).collect()
    };
    let objective = |x: &[f64]| -> f64 {
        let p = plan(x);
        let lin: f64 = (0..a).map(|i| x[i] * r[i]).sum::<f64>() + (0..b).map(|j| x[a + j] * c[j]).sum::<f64>();
        lin - p.iter().flatten().sum::<f64>() / lambda
    };
    // Start where P = r c^T exp(-lambda M).
    let mut x = vec![0.0; n];
    for i in 0..a {
        x[i] = (r[i].ln() + 0.5) / lambda;
    }
    for j in 0..b {
        x[a + j] = (c[j].ln() + 0.5) / lambda;
    }
    let residual = |x: &[f64]| -> f64 {
        let p = plan(x);
        let rows = (0..a).map(|i| (r[i] - p[i].iter().sum::<f64>()).abs());
        let cols = (0..b).map(|j| (c[j] - (0..a).map(|i| p[i][j]).sum::<f64>()).abs());
        rows.chain(cols).sum()
    };
    let mut obj = objective(&x);
    // Levenberg-Marquardt damping keeps the steps sane while P is tiny.
    let mut mu = 1.0;
    for _ in 0..20_000 {
        let p = plan(&x);
        let mut grad = vec![0.0; n];
        for i in 0..a {
            grad[i] = r[i] - p[i].iter().sum::<f64>();
        }
        for j in 0..b {
            grad[a + j] = c[j] - (0..a).map(|i| p[i][j]).sum::<f64>();
        }
        if grad.iter().map(|g| g.abs()).sum::<f64>() < 1e-15 {
            break;
        }
        // Negated Hessian, plus a gauge-fixing term on the last coordinate.
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..a {
            for j in 0..b {
                let w = lambda * p[i][j];
                h[i][i] += w;
                h[a + j][a + j] += w;
                h[i][a + j] += w;
                h[a + j][i] += w;
            }
        }
        h[n - 1][n - 1] += 1.0;
        let mut accepted = false;
        while mu < 1e20 {
            let mut damped = h.clone();
            for (k, row) in damped.iter_mut().enumerate() {
                row[k] += mu;
            }
            let step = solve_dense(damped, grad.clone());
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + s).collect();
            let val = objective(&trial);
            // Near the optimum the objective gain drowns in round-off, so a
            // smaller gradient also counts as progress.
            let better = val > obj || (val >= obj - 1e-14 * obj.abs() && residual(&trial) < residual(&x));
            if val.is_finite() && better {
                x = trial;
                obj = val;
                mu = (mu / 4.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let p = plan(&x);
    let cost = (0..a).map(|i| (0..b).map(|j| p[i][j] * m[i][j]).sum::<f64>()).sum();
    (cost, p)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut h: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| h[x][col].abs().total_cmp(&h[y][col].abs())).unwrap();
        h.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = h[row][col] / h[col][col];
            for k in col..n {
                h[row][k] -= f * h[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| h[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / h[row][row];
    }
    x
}

/// Minimizes `<P, M> - h(P) / lambda` for `r = c = [1/2, 1/2]` and
/// `M = [[0, 1], [1, 0]]` by a grid scan refined by bisecting the derivative over
/// the one free entry `P_00 = p`. Returns the cost `1 - 2p`.
pub fn two_by_two_grid(lambda: f64) -> f64 {
    let f = |p: f64| {
        let q = 0.5 - p;
        let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
        (1.0 - 2.0 * p) + 2.0 * (xlogx(p) + xlogx(q)) / lambda
    };
    // derivative of f, for refining the bracket found on the grid
    let df = |p: f64| -2.0 + 2.0 * (p.ln() - (0.5 - p).ln()) / lambda;
    let n = 10_000;
    let step = 0.5 / n as f64;
    let best = (1..n).map(|k| k as f64 * step).min_by(|&x, &y| f(x).total_cmp(&f(y))).unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if df(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 - (lo + hi)
}

/// Mutual information of a joint table, computed from scratch.
pub fn mutual_information(p: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = p.iter().map(|row| row.iter().sum()).collect();
    let cols: Vec<f64> = (0..p[0].len()).map(|j| p.iter().map(|row| row[j]).sum()).collect();
    let mut mi = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                mi += x * (x / (rows[i] * cols[j])).ln();
            }
        }
    }
    mi
}

/// Symmetric eigenvalue lower bound by Jacobi rotations.
pub fn min_eigenvalue_jacobi(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Largest absolute deviation of a table's row and column sums.
pub fn marginal_error(p: &[Vec<f64>], r: &[f64], c: &[f64]) -> f64 {
    let rows = p.iter().zip(r).map(|(row, ri)| (row.iter().sum::<f64>() - ri).abs());
    let cols = c.iter().enumerate().map(|(j, cj)| (p.iter().map(|row| row[j]).sum::<f64>() - cj).abs());
    rows.chain(cols).fold(0.0, f64::max)
}
