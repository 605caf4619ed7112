//! Tridiagonal kernels: a complex linear solve for the Cayley step and a
//! real symmetric eigensolver (implicit QL with Wilkinson shifts).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `A x = rhs` in place for a tridiagonal `A` given by its
/// `lower` (a_{i+1,i}), `diag` and `upper` (a_{i,i+1}) bands, without
/// pivoting. `scratch` must hold `diag.len()` entries.
pub fn solve_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert!(lower.len() + 1 >= n && upper.len() + 1 >= n);
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return Err(Error::Numerical("singular tridiagonal system".into()));
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * scratch[i];
        if pivot.norm() == 0.0 {
            return Err(Error::Numerical("singular tridiagonal system".into()));
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i + 1] * next;
    }
    Ok(())
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column j (stored as `vectors[j]`) is the unit eigenvector of `values[j]`,
    /// present when requested.
    pub vectors: Option<Vec<Vec<f64>>>,
}

/// Implicit QL iteration on `diag` and `off` (off[i] couples i and i+1).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(TridiagonalEigen {
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }
    debug_assert_eq!(off.len() + 1, n);
    let mut d = diag.to_vec();
    // e[i] couples i and i+1; e[n-1] is a zero sentinel
    let mut e = off.to_vec();
    e.push(0.0);
    // z is row-major: z[row * n + col]
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        Some(z)
    } else {
        None
    };

    const MAX_ITER: usize = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::Numerical(format!("QL iteration did not converge at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = z.map(|z| {
        order
            .iter()
            .map(|&j| (0..n).map(|row| z[row * n + j]).collect())
            .collect()
    });
    Ok(TridiagonalEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tridiagonal_solve_matches_dense_product() {
        let n = 7;
        let lower: Vec<_> = (0..n - 1).map(|i| c(0.3 * i as f64, -0.1)).collect();
        let upper: Vec<_> = (0..n - 1).map(|i| c(-0.2, 0.05 * i as f64)).collect();
        let diag: Vec<_> = (0..n).map(|i| c(2.0 + i as f64, 0.5)).collect();
        let x_true: Vec<_> = (0..n).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let mut rhs = vec![c(0.0, 0.0); n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += lower[i - 1] * x_true[i - 1];
            }
            if i + 1 < n {
                rhs[i] += upper[i] * x_true[i + 1];
            }
        }
        let mut scratch = vec![c(0.0, 0.0); n];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch).unwrap();
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let mut rhs = vec![c(1.0, 0.0); 2];
        let mut scratch = vec![c(0.0, 0.0); 2];
        let z = c(0.0, 0.0);
        assert!(solve_tridiagonal(&[z], &[z, c(1.0, 0.0)], &[z], &mut rhs, &mut scratch).is_err());
    }

    #[test]
    fn eigen_matches_dense_solver() {
        let n = 12;
        let diag: Vec<f64> = (0..n).map(|i| 0.4 * i as f64 - 1.0).collect();
        let off: Vec<f64> = (1..n).map(|i| -(i as f64).sqrt()).collect();
        let eig = symmetric_tridiagonal_eigen(&diag, &off, true).unwrap();

        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = diag[i];
            if i + 1 < n {
                dense[(i, i + 1)] = off[i];
                dense[(i + 1, i)] = off[i];
            }
        }
        let mut reference: Vec<f64> = dense.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let vecs = eig.vectors.unwrap();
        for (j, v) in vecs.iter().enumerate() {
            let x = nalgebra::DVector::from_column_slice(v);
            let residual = (&dense * &x - &x * eig.values[j]).norm();
            assert!(residual < 1e-12);
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        let eig = symmetric_tridiagonal_eigen(&[3.5], &[], true).unwrap();
        assert_eq!(eig.values, vec![3.5]);
        assert!(symmetric_tridiagonal_eigen(&[], &[], false).unwrap().values.is_empty());
    }
}
