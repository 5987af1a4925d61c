//! Small dense eigenvalue routine for Hermitian matrices.
//!
//! Dimensions in this crate stay at or below 2 x 64, so a cyclic Jacobi
//! iteration on the real-symmetric embedding of the Hermitian matrix is
//! plenty; no external LAPACK dependency needed.

use ndarray::Array2;

use crate::hilbert::C64;

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Works on the real symmetric embedding `[[A, -B], [B, A]]` of
/// `H = A + iB`, whose spectrum is that of `H` doubled.
pub fn hermitian_eigenvalues(h: &Array2<C64>) -> Vec<f64> {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "matrix must be square");
    let m = 2 * n;
    let mut s = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[[i, j]];
            s[i * m + j] = z.re;
            s[(n + i) * m + (n + j)] = z.re;
            s[i * m + (n + j)] = -z.im;
            s[(n + i) * m + j] = z.im;
        }
    }
    jacobi_eigenvalues(&mut s, m);
    let mut eigs: Vec<f64> = (0..m).map(|i| s[i * m + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // The embedding doubles every eigenvalue; keep one of each pair.
    eigs.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi sweeps on a real symmetric matrix stored row-major in `s`.
fn jacobi_eigenvalues(s: &mut [f64], n: usize) {
    let fro: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fro == 0.0 {
        return;
    }
    let tol = 1e-15 * fro;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += s[p * n + q] * s[p * n + q];
            }
        }
        if (2.0 * off).sqrt() < tol {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p * n + q];
                if apq.abs() < tol / (n as f64) {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[k * n + p];
                    let skq = s[k * n + q];
                    s[k * n + p] = c * skp - sn * skq;
                    s[k * n + q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[p * n + k];
                    let sqk = s[q * n + k];
                    s[p * n + k] = c * spk - sn * sqk;
                    s[q * n + k] = sn * spk + c * sqk;
                }
            }
        }
    }
}
