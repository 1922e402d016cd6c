//! Dense symmetric eigensolver (cyclic Jacobi) used by the diagonalization
//! oracle, plus a Hermitian wrapper through the real 2n×2n embedding.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Default sweep budget for [`jacobi_eigen`].
pub const DEFAULT_MAX_SWEEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal sum {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`, when requested.
    pub vectors: Option<DMatrix<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Threshold variant: during the first three sweeps only off-diagonal
/// elements above `0.2·S/n²` are rotated (S = sum of off-diagonal
/// magnitudes); after four sweeps elements negligible against both
/// diagonal entries are zeroed outright. Converges when the off-diagonal
/// sum underflows to zero.
pub fn jacobi_eigen(
    matrix: &DMatrix<f64>,
    with_vectors: bool,
    max_sweeps: usize,
) -> Result<SymmetricEigen, LinalgError> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let n = rows;
    let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if gap > 1e-12 * scale {
                return Err(LinalgError::NotSymmetric { row: i, col: j, gap });
            }
        }
    }

    // Row-major working copy; only the strict upper triangle is referenced.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = matrix[(i, j)];
        }
    }
    // Eigenvectors stored column by column (column p occupies v[p*n..(p+1)*n]).
    let mut v = if with_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Some(v)
    } else {
        None
    };
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let mut converged_after = None;
    let mut off = 0.0;
    for sweep in 1..=max_sweeps {
        off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].abs();
            }
        }
        if off == 0.0 {
            converged_after = Some(sweep - 1);
            break;
        }
        let thresh = if sweep < 4 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let guard = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + guard == d[p].abs() && d[q].abs() + guard == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + guard == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let shift = t * apq;
                z[p] -= shift;
                z[q] += shift;
                d[p] -= shift;
                d[q] += shift;
                a[p * n + q] = 0.0;
                let rot = |g: f64, h: f64| (g - s * (h + g * tau), h + s * (g - h * tau));
                for j in 0..p {
                    let (x, y) = rot(a[j * n + p], a[j * n + q]);
                    a[j * n + p] = x;
                    a[j * n + q] = y;
                }
                for j in (p + 1)..q {
                    let (x, y) = rot(a[p * n + j], a[j * n + q]);
                    a[p * n + j] = x;
                    a[j * n + q] = y;
                }
                for j in (q + 1)..n {
                    let (x, y) = rot(a[p * n + j], a[q * n + j]);
                    a[p * n + j] = x;
                    a[q * n + j] = y;
                }
                if let Some(v) = v.as_mut() {
                    let (lo, hi) = v.split_at_mut(q * n);
                    let col_p = &mut lo[p * n..(p + 1) * n];
                    let col_q = &mut hi[..n];
                    for (vp, vq) in col_p.iter_mut().zip(col_q.iter_mut()) {
                        let (x, y) = rot(*vp, *vq);
                        *vp = x;
                        *vq = y;
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    let sweeps = match converged_after {
        Some(s) => s,
        None => {
            // The last sweep may have finished the job.
            let mut rest = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    rest += a[p * n + q].abs();
                }
            }
            if rest != 0.0 {
                return Err(LinalgError::NoConvergence { sweeps: max_sweeps, off_diagonal: off.max(rest) });
            }
            max_sweeps
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = v.map(|v| DMatrix::from_fn(n, n, |row, col| v[order[col] * n + row]));
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Diagonalizes the real symmetric embedding `[[Re, −Im], [Im, Re]]`, whose
/// spectrum is that of the Hermitian matrix with every eigenvalue doubled.
pub fn hermitian_eigenvalues(matrix: &DMatrix<Complex64>, max_sweeps: usize) -> Result<Vec<f64>, LinalgError> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let n = rows;
    let embed = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = matrix[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = jacobi_eigen(&embed, false, max_sweeps)?;
    Ok(eig.values.iter().step_by(2).copied().collect())
}
