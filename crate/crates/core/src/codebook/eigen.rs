use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm at which a Jacobi sweep is considered
/// converged, relative to the full matrix norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Largest negative eigenvalue (relative to the matrix scale) that is treated
/// as rounding noise on a positive semidefinite matrix and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// sorted in decreasing order.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.frobenius_norm_sqr().sqrt();
    if a.hermitian_defect() > 1e-9 * scale.max(1.0) {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    let mut m: Vec<Complex64> = a.entries().to_vec();
    let at = |i: usize, j: usize| i * n + j;

    let off_norm = |m: &[Complex64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += m[at(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > JACOBI_TOLERANCE * scale {
        if sweeps == MAX_SWEEPS {
            return Err(Error::numerical(format!(
                "Jacobi eigen solver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[at(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                // Phase-rotate so the (p, q) entry is real, then apply a real
                // Jacobi rotation that annihilates it.
                let phase = apq / g;
                let app = m[at(p, p)].re;
                let aqq = m[at(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Columns of U: u_p = c e_p - s e^{-iφ} e_q, u_q = s e_p + c e^{-iφ} e_q.
                let ph_conj = phase.conj();
                for k in 0..n {
                    let akp = m[at(k, p)];
                    let akq = m[at(k, q)];
                    m[at(k, p)] = akp * c - akq * ph_conj * s;
                    m[at(k, q)] = akp * s + akq * ph_conj * c;
                }
                for k in 0..n {
                    let apk = m[at(p, k)];
                    let aqk = m[at(q, k)];
                    m[at(p, k)] = apk * c - aqk * phase * s;
                    m[at(q, k)] = apk * s + aqk * phase * c;
                }
                m[at(p, q)] = Complex64::new(0.0, 0.0);
                m[at(q, p)] = Complex64::new(0.0, 0.0);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[at(i, i)].re).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// Smallest eigenvalue of a positive semidefinite Hermitian matrix, with
/// rounding-level negatives clamped to zero.
pub fn psd_min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigenvalues(a)?;
    let min = *eig.last().expect("square matrix has at least one eigenvalue");
    let scale = a.frobenius_norm_sqr().sqrt().max(1.0);
    if min < -PSD_CLAMP * scale {
        return Err(Error::numerical(format!(
            "matrix expected positive semidefinite has eigenvalue {min:e}"
        )));
    }
    Ok(min.max(0.0))
}
