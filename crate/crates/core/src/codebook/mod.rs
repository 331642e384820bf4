//! Codeword matrices, the Alamouti codebook, and the eigenvalue spectrum of
//! codeword differences.
//!
//! For a pair `(X_i, X_j)` the conditional pairwise error exponent is
//! `tr(H Δ Δᴴ Hᴴ)` with `Δ = X_i − X_j`. For a rank-one keyhole channel
//! `H = β αᵀ` this is bounded below by `λ_min(Δ Δᴴ) · ‖α‖² ‖β‖²`, so every
//! analytic bound only needs the smallest eigenvalue of each difference
//! Gram matrix. [`DifferenceSpectrum`] caches those for a whole codebook.

mod eigen;
mod matrix;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{hermitian_eigenvalues, psd_min_eigenvalue, JACOBI_TOLERANCE, PSD_CLAMP};
pub use matrix::ComplexMatrix;

/// Named unit-energy constellations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Bpsk,
    Qpsk,
}

impl Constellation {
    /// Points in index order. For QPSK bit 0 of the index is the sign of the
    /// real part and bit 1 the sign of the imaginary part, so binary index
    /// labels are Gray labels.
    pub fn points(self) -> Vec<Complex64> {
        match self {
            Constellation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Constellation::Qpsk => vec![
                Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            ],
        }
    }
}

/// A finite set of equally shaped `n_tx × timeslots` codeword matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    n_tx: usize,
    timeslots: usize,
    codewords: Vec<ComplexMatrix>,
    /// Bits carried per codeword when the codeword index is a binary label.
    bits_per_codeword: Option<u32>,
}

impl Codebook {
    pub fn new(codewords: Vec<ComplexMatrix>) -> Result<Self> {
        let first = codewords
            .first()
            .ok_or_else(|| Error::invalid("codebook must contain at least one codeword"))?;
        let (n_tx, timeslots) = first.shape();
        for (k, cw) in codewords.iter().enumerate() {
            if cw.shape() != (n_tx, timeslots) {
                return Err(Error::invalid(format!(
                    "codeword {k} is {}x{}, expected {n_tx}x{timeslots}",
                    cw.rows(),
                    cw.cols()
                )));
            }
        }
        for i in 0..codewords.len() {
            for j in (i + 1)..codewords.len() {
                if codewords[i] == codewords[j] {
                    return Err(Error::invalid(format!("codewords {i} and {j} are identical")));
                }
            }
        }
        Ok(Self {
            n_tx,
            timeslots,
            codewords,
            bits_per_codeword: None,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn timeslots(&self) -> usize {
        self.timeslots
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[ComplexMatrix] {
        &self.codewords
    }

    pub fn get(&self, index: usize) -> Option<&ComplexMatrix> {
        self.codewords.get(index)
    }

    pub fn bits_per_codeword(&self) -> Option<u32> {
        self.bits_per_codeword
    }

    /// Number of label bits that differ between two codeword indices.
    pub fn bit_errors(&self, sent: usize, decided: usize) -> Option<u32> {
        self.bits_per_codeword
            .map(|_| ((sent ^ decided) as u64).count_ones())
    }

    /// True when every `X Xᴴ` is a real multiple of the identity.
    pub fn is_orthogonal_design(&self, tol: f64) -> bool {
        self.codewords.iter().all(|x| {
            let g = x.matmul(&x.adjoint()).expect("square Gram");
            let k = g[(0, 0)].re;
            let id = ComplexMatrix::identity(self.n_tx).scale(k);
            g.sub(&id).expect("same shape").frobenius_norm_sqr().sqrt() <= tol * k.abs().max(1.0)
        })
    }
}

fn alamouti_block(x1: Complex64, x2: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[x1, -x2.conj()], &[x2, x1.conj()]])
        .expect("2x2 literal is well formed")
}

/// All Alamouti codewords `[[x1, −x2*], [x2, x1*]]` over a constellation.
///
/// Rows are transmit antennas and columns are time slots. Codewords are
/// ordered lexicographically over `(index(x1), index(x2))`, so codeword
/// `k` carries symbols `k / M` and `k % M`.
pub fn build_alamouti_codebook(constellation: &[Complex64]) -> Result<Codebook> {
    if constellation.is_empty() {
        return Err(Error::invalid("constellation is empty"));
    }
    for (i, a) in constellation.iter().enumerate() {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::invalid(format!("constellation point {i} is not finite")));
        }
        if constellation[..i].contains(a) {
            return Err(Error::invalid(format!("constellation point {i} is a duplicate")));
        }
    }
    let codewords = constellation
        .iter()
        .flat_map(|&x1| constellation.iter().map(move |&x2| alamouti_block(x1, x2)))
        .collect();
    let mut cb = Codebook::new(codewords)?;
    let m = constellation.len();
    if m.is_power_of_two() {
        cb.bits_per_codeword = Some(2 * m.trailing_zeros());
    }
    Ok(cb)
}

/// `(x0 − xj)(x0 − xj)ᴴ`.
pub fn gram_difference(x0: &ComplexMatrix, xj: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = x0.sub(xj)?;
    d.matmul(&d.adjoint())
}

/// Smallest eigenvalue of the codeword-difference Gram matrix.
pub fn lambda_min(x0: &ComplexMatrix, xj: &ComplexMatrix) -> Result<f64> {
    psd_min_eigenvalue(&gram_difference(x0, xj)?)
}

/// Pairwise `λ_min` over all unordered codeword pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSpectrum {
    size: usize,
    /// Strict upper triangle, row by row.
    upper: Vec<f64>,
}

impl DifferenceSpectrum {
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i == j || i >= self.size || j >= self.size {
            return None;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // Entries before row a: sum_{r<a} (n - 1 - r)
        Some(a * (2 * self.size - a - 1) / 2 + (b - a - 1))
    }

    /// `λ_min` for the pair, symmetric in its arguments. `None` for `i == j`
    /// or out-of-range indices.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.slot(i, j).map(|k| self.upper[k])
    }

    /// Codebook size the spectrum was computed for.
    pub fn codebook_size(&self) -> usize {
        self.size
    }

    /// Number of unordered pairs.
    pub fn pair_count(&self) -> usize {
        self.upper.len()
    }

    /// `(j, λ_min(i, j))` for all `j ≠ i`.
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.size)
            .filter(move |&j| j != i)
            .filter_map(move |j| self.get(i, j).map(|l| (j, l)))
    }
}

pub fn difference_spectrum(cb: &Codebook) -> Result<DifferenceSpectrum> {
    let n = cb.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "difference spectrum needs at least two codewords, got {n}"
        )));
    }
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            upper.push(lambda_min(&cb.codewords[i], &cb.codewords[j])?);
        }
    }
    Ok(DifferenceSpectrum { size: n, upper })
}
