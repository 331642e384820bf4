//! Random keyhole and i.i.d. fading channels.
//!
//! A keyhole channel is the outer product `H = β αᵀ` of a receive-side
//! scattering vector `β` (length `n_rx`) and a transmit-side vector `α`
//! (length `n_tx`), so `rank(H) = 1` and `‖H‖²_F = ‖α‖² ‖β‖²`.
//!
//! Randomness comes from [`SeededRng`]: ChaCha8 keyed by a 64-bit seed with
//! a 64-bit stream id selecting an independent keystream. Given the same
//! `(seed, stream_id)` the draws are identical on every platform. Normals
//! are produced by Box–Muller and Gamma variates by Marsaglia–Tsang, both
//! implemented here so that the mapping from the uniform stream to variates
//! is fixed by this crate and not by a dependency's version.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::ComplexMatrix;
use crate::error::{Error, Result};

/// Lower limit of the Nakagami shape parameter.
pub const NAKAGAMI_M_MIN: f64 = 0.5;

/// Deterministic random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal by Box–Muller; the second variate of each pair is
    /// kept for the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let (z0, z1) = self.normal_pair();
        self.spare_normal = Some(z1);
        z0
    }

    #[inline]
    fn normal_pair(&mut self) -> (f64, f64) {
        let r = (-2.0 * self.uniform_open0().ln()).sqrt();
        let (s, c) = (TAU * self.uniform()).sin_cos();
        (r * c, r * s)
    }

    /// Circularly symmetric complex Gaussian with `E|z|² = variance`.
    #[inline]
    pub fn complex_gaussian(&mut self, variance: f64) -> Complex64 {
        let (re, im) = self.normal_pair();
        Complex64::new(re, im) * (0.5 * variance).sqrt()
    }

    /// Unit-modulus phasor with phase uniform on `[0, 2π)`.
    #[inline]
    pub fn uniform_phasor(&mut self) -> Complex64 {
        let (s, c) = (TAU * self.uniform()).sin_cos();
        Complex64::new(c, s)
    }
}

/// One draw from Gamma(shape, scale), mean `shape·scale`.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut SeededRng) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "gamma parameters must be positive, got shape={shape}, scale={scale}"
        )));
    }
    Ok(scale * gamma_unit(shape, rng))
}

/// Marsaglia–Tsang for unit scale; `shape < 1` is boosted through
/// `Gamma(shape) = Gamma(shape + 1) · U^{1/shape}`.
fn gamma_unit(shape: f64, rng: &mut SeededRng) -> f64 {
    if shape < 1.0 {
        let g = gamma_unit(shape + 1.0, rng);
        return g * rng.uniform_open0().powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.uniform_open0();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn check_nakagami(m: f64, omega: f64) -> Result<()> {
    if !(m >= NAKAGAMI_M_MIN) || !m.is_finite() {
        return Err(Error::domain(format!(
            "Nakagami shape m = {m} is outside the domain m_T ≥ 0.50"
        )));
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!(
            "Nakagami spread omega must be positive, got {omega}"
        )));
    }
    Ok(())
}

/// Nakagami-m amplitude with `E[r²] = omega`: the square root of a
/// Gamma(m, omega/m) draw.
pub fn sample_nakagami_amplitude(m: f64, omega: f64, rng: &mut SeededRng) -> Result<f64> {
    check_nakagami(m, omega)?;
    Ok((omega / m * gamma_unit(m, rng)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingKind {
    /// Keyhole with `α`, `β` entries i.i.d. CN(0, 1).
    GaussianKeyhole,
    /// Keyhole with Nakagami-m amplitudes and uniform phases on `α`, `β`.
    NakagamiKeyhole,
    /// Full-rank channel with independent Nakagami-m entries.
    IidNakagami,
}

impl FadingKind {
    pub fn is_keyhole(self) -> bool {
        !matches!(self, FadingKind::IidNakagami)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FadingKind::GaussianKeyhole => "gaussian-keyhole",
            FadingKind::NakagamiKeyhole => "nakagami-keyhole",
            FadingKind::IidNakagami => "iid-nakagami",
        }
    }
}

/// Distribution of one `n_rx × n_tx` channel matrix.
///
/// For [`FadingKind::IidNakagami`] each entry uses shape `m_tx` and spread
/// `omega_tx · omega_rx`, so that `E|h_ij|²` matches the keyhole kinds with
/// the same parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyholeSpec {
    pub n_tx: u32,
    pub n_rx: u32,
    pub m_tx: f64,
    pub m_rx: f64,
    pub omega_tx: f64,
    pub omega_rx: f64,
    pub kind: FadingKind,
}

impl KeyholeSpec {
    pub fn gaussian(n_tx: u32, n_rx: u32) -> Self {
        Self {
            n_tx,
            n_rx,
            m_tx: 1.0,
            m_rx: 1.0,
            omega_tx: 1.0,
            omega_rx: 1.0,
            kind: FadingKind::GaussianKeyhole,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::invalid(format!(
                "antenna counts must be positive, got n_tx={}, n_rx={}",
                self.n_tx, self.n_rx
            )));
        }
        check_nakagami(self.m_tx, self.omega_tx)?;
        check_nakagami(self.m_rx, self.omega_rx)?;
        if self.kind == FadingKind::GaussianKeyhole
            && (self.m_tx != 1.0 || self.m_rx != 1.0 || self.omega_tx != 1.0 || self.omega_rx != 1.0)
        {
            return Err(Error::invalid(
                "gaussian-keyhole channels have m = 1 and unit variance on both sides",
            ));
        }
        Ok(())
    }

    /// `E‖H‖²_F`.
    pub fn mean_frobenius_sqr(&self) -> f64 {
        (self.n_tx * self.n_rx) as f64 * self.omega_tx * self.omega_rx
    }
}

/// One sampled channel matrix, with its keyhole factors when it has them.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// Transmit-side factors `α_j e^{jφ_j}`; `None` for i.i.d. channels.
    pub alpha: Option<Vec<Complex64>>,
    /// Receive-side factors `β_i e^{jθ_i}`; `None` for i.i.d. channels.
    pub beta: Option<Vec<Complex64>>,
    /// `n_rx × n_tx` matrix.
    pub h: ComplexMatrix,
}

impl ChannelRealization {
    /// An all-zero channel, mostly useful in tests.
    pub fn zero(n_rx: usize, n_tx: usize) -> Self {
        Self {
            alpha: None,
            beta: None,
            h: ComplexMatrix::zeros(n_rx, n_tx),
        }
    }

    pub fn from_matrix(h: ComplexMatrix) -> Self {
        Self {
            alpha: None,
            beta: None,
            h,
        }
    }
}

pub fn sample_channel(spec: &KeyholeSpec, rng: &mut SeededRng) -> Result<ChannelRealization> {
    spec.validate()?;
    Ok(sample_channel_unchecked(spec, rng))
}

/// [`sample_channel`] for a spec already known to be valid.
pub(crate) fn sample_channel_unchecked(spec: &KeyholeSpec, rng: &mut SeededRng) -> ChannelRealization {
    let (n_tx, n_rx) = (spec.n_tx as usize, spec.n_rx as usize);
    match spec.kind {
        FadingKind::GaussianKeyhole => {
            let alpha: Vec<Complex64> = (0..n_tx).map(|_| rng.complex_gaussian(1.0)).collect();
            let beta: Vec<Complex64> = (0..n_rx).map(|_| rng.complex_gaussian(1.0)).collect();
            keyhole(alpha, beta)
        }
        FadingKind::NakagamiKeyhole => {
            let mut factor = |m: f64, omega: f64| {
                let amp = (omega / m * gamma_unit(m, rng)).sqrt();
                rng.uniform_phasor() * amp
            };
            let alpha: Vec<Complex64> = (0..n_tx).map(|_| factor(spec.m_tx, spec.omega_tx)).collect();
            let beta: Vec<Complex64> = (0..n_rx).map(|_| factor(spec.m_rx, spec.omega_rx)).collect();
            keyhole(alpha, beta)
        }
        FadingKind::IidNakagami => {
            let m = spec.m_tx;
            let omega = spec.omega_tx * spec.omega_rx;
            let mut h = ComplexMatrix::zeros(n_rx, n_tx);
            for z in h.entries_mut() {
                let amp = (omega / m * gamma_unit(m, rng)).sqrt();
                *z = rng.uniform_phasor() * amp;
            }
            ChannelRealization::from_matrix(h)
        }
    }
}

fn keyhole(alpha: Vec<Complex64>, beta: Vec<Complex64>) -> ChannelRealization {
    let h = ComplexMatrix::outer(&beta, &alpha);
    ChannelRealization {
        alpha: Some(alpha),
        beta: Some(beta),
        h,
    }
}
