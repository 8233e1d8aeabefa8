//! Small dense symmetric eigenproblems and helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dimension up to which the full Jacobi decomposition is used.
pub const JACOBI_MAX_DIM: usize = 64;
const POWER_REL_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 100_000;

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
///
/// Returns eigenvalues and the matrix whose columns are the corresponding
/// orthonormal eigenvectors.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eigen needs a square matrix");
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    const SWEEPS: usize = 100;
    for _ in 0..SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            return Ok((a.diagonal(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NonConvergence { iterations: SWEEPS })
}

/// Largest eigenvalue of a symmetric matrix with a unit eigenvector.
///
/// Jacobi up to [`JACOBI_MAX_DIM`], shifted power iteration above.
pub fn max_eigenpair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if n <= JACOBI_MAX_DIM {
        let (vals, vecs) = jacobi_eigen(m)?;
        let (imax, &lmax) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        return Ok((lmax, vecs.column(imax).into_owned()));
    }
    shifted_power_iteration(m)
}

fn shifted_power_iteration(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    // Gershgorin bound makes m + shift positive semidefinite.
    let shift = (0..n)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let shifted = m + DMatrix::<f64>::identity(n, n) * shift;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = &shifted * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok((-shift, v));
        }
        v = w / norm;
        if (next - lambda).abs() <= POWER_REL_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok((next - shift, v));
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
    })
}

/// Orthonormal basis (as columns) of the mean-zero subspace of `R^n`.
///
/// Column `k` is `(1, .., 1, -(k+1), 0, ..) / sqrt((k+1)(k+2))`.
pub fn helmert_basis(n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(n, n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let m = (k + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for i in 0..=k {
            h[(i, k)] = 1.0 / norm;
        }
        h[(k + 1, k)] = -m / norm;
    }
    h
}

/// Spectral norm of a small complex matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log grid needs 0 < lo <= hi");
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (vals, vecs) = jacobi_eigen(&m).unwrap();
        let mut sorted: Vec<f64> = vals.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let s2 = 2f64.sqrt();
        for (got, want) in sorted.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((got - want).abs() < 1e-12);
        }
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_jacobi() {
        let n = 80;
        let m = DMatrix::from_fn(n, n, |i, j| ((i as f64) - (j as f64)).abs().sqrt() - 0.3);
        let (lp, _) = shifted_power_iteration(&m).unwrap();
        let (vals, _) = jacobi_eigen(&m).unwrap();
        let lj = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lp - lj).abs() < 1e-6 * lj.abs().max(1.0), "{lp} vs {lj}");
    }

    #[test]
    fn helmert_columns_are_orthonormal_and_mean_zero() {
        let h = helmert_basis(6);
        let gram = h.transpose() * &h;
        assert!((gram - DMatrix::<f64>::identity(5, 5)).norm() < 1e-14);
        for c in h.column_iter() {
            assert!(c.sum().abs() < 1e-14);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-6, 1e3, 49);
        assert_eq!(g.len(), 49);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[48], 1e3);
        assert!(g.windows(2).all(|p| p[0] < p[1]));
    }
}
