//! Analytic pairwise error probability bounds for selective
//! decode-and-forward relaying.
//!
//! Every bound is a Craig-form integral
//!
//! ```text
//! (1/π) ∫₀^{π/2} M(c / sin²θ) dθ,   c = P · λ_min / (4 · N_tx · η₀)
//! ```
//!
//! of the moment generating function `M` of the hop's squared channel norm.
//! The end-to-end figure combines three links: source→relay (SR) decides
//! whether the relay forwards, source→destination (SD) is always heard, and
//! relay→destination (RD) adds a second observation when the relay decoded
//! correctly.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::codebook::DifferenceSpectrum;
use crate::error::{Error, Result};
use crate::fading::{FadingKind, KeyholeSpec, NAKAGAMI_M_MIN};
use crate::specfun::{cached_rule, hyp2f0_neg_with, mgf_nakagami_iid, MgfQuadrature, RuleKind};

/// Relative change allowed when the θ-quadrature order is doubled.
pub const CRAIG_TOLERANCE: f64 = 1e-8;
/// Default Gauss–Legendre order on θ.
pub const DEFAULT_QUAD_ORDER: usize = 64;
const MAX_ORDER_DOUBLINGS: u32 = 4;

/// Antenna counts, transmit powers and noise level of the relay network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTopology {
    pub n_s: u32,
    pub n_r: u32,
    pub n_d: u32,
    /// Source power `P₀`.
    pub p0: f64,
    /// Relay power `P₁`; zero switches the relay off.
    pub p1: f64,
    /// Noise power per received complex entry `η₀`.
    pub eta0: f64,
}

impl LinkTopology {
    /// Topology at a given `SNR_dB = 10·log10(p0/eta0)` with `p1 = ratio·p0`.
    pub fn at_snr_db(n_s: u32, n_r: u32, n_d: u32, eta0: f64, p1_over_p0: f64, snr_db: f64) -> Self {
        let p0 = eta0 * 10f64.powf(snr_db / 10.0);
        Self {
            n_s,
            n_r,
            n_d,
            p0,
            p1: p1_over_p0 * p0,
            eta0,
        }
    }

    /// Same antennas, noise and `p1/p0` ratio at another SNR.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        let ratio = if self.p0 > 0.0 { self.p1 / self.p0 } else { 1.0 };
        Self::at_snr_db(self.n_s, self.n_r, self.n_d, self.eta0, ratio, snr_db)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p0 / self.eta0).log10()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 || self.n_r == 0 || self.n_d == 0 {
            return Err(Error::invalid(format!(
                "antenna counts must be positive, got n_s={}, n_r={}, n_d={}",
                self.n_s, self.n_r, self.n_d
            )));
        }
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            return Err(Error::invalid(format!("p0 must be positive, got {}", self.p0)));
        }
        if !(self.p1 >= 0.0) || !self.p1.is_finite() {
            return Err(Error::invalid(format!("p1 must be non-negative, got {}", self.p1)));
        }
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(Error::invalid(format!("eta0 must be positive, got {}", self.eta0)));
        }
        Ok(())
    }

    /// `(transmit power, n_tx, n_rx)` of a hop.
    pub fn hop_params(&self, hop: Hop) -> (f64, u32, u32) {
        match hop {
            Hop::SourceRelay => (self.p0, self.n_s, self.n_r),
            Hop::SourceDestination => (self.p0, self.n_s, self.n_d),
            Hop::RelayDestination => (self.p1, self.n_r, self.n_d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hop {
    SourceRelay,
    SourceDestination,
    RelayDestination,
}

/// Fading law of one link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFading {
    pub kind: FadingKind,
    /// Nakagami shape, used for both ends of a keyhole link.
    pub m: f64,
    /// Mean power per channel entry `E|h_ij|²`.
    pub omega: f64,
}

impl LinkFading {
    pub const GAUSSIAN_KEYHOLE: LinkFading = LinkFading {
        kind: FadingKind::GaussianKeyhole,
        m: 1.0,
        omega: 1.0,
    };

    pub fn nakagami_keyhole(m: f64, omega: f64) -> Self {
        Self {
            kind: FadingKind::NakagamiKeyhole,
            m,
            omega,
        }
    }

    pub fn iid_nakagami(m: f64, omega: f64) -> Self {
        Self {
            kind: FadingKind::IidNakagami,
            m,
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= NAKAGAMI_M_MIN) || !self.m.is_finite() {
            return Err(Error::domain(format!(
                "m = {} is below the Nakagami limit m_T ≥ 0.50",
                self.m
            )));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!("omega must be positive, got {}", self.omega)));
        }
        if self.kind == FadingKind::GaussianKeyhole && (self.m != 1.0 || self.omega != 1.0) {
            return Err(Error::invalid(
                "gaussian-keyhole links require m = 1 and omega = 1",
            ));
        }
        Ok(())
    }

    /// Sampler parameters for this link. Keyhole links split `omega` evenly
    /// between the two scattering vectors so `E|h_ij|² = omega`.
    pub fn channel_spec(&self, n_tx: u32, n_rx: u32) -> KeyholeSpec {
        let (omega_tx, omega_rx) = if self.kind.is_keyhole() {
            (self.omega.sqrt(), self.omega.sqrt())
        } else {
            (self.omega, 1.0)
        };
        let (omega_tx, omega_rx) = if self.kind == FadingKind::GaussianKeyhole {
            (1.0, 1.0)
        } else {
            (omega_tx, omega_rx)
        };
        KeyholeSpec {
            n_tx,
            n_rx,
            m_tx: self.m,
            m_rx: self.m,
            omega_tx,
            omega_rx,
            kind: self.kind,
        }
    }
}

/// Fading of the three links.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFadingSpec {
    pub sd: LinkFading,
    pub sr: LinkFading,
    pub rd: LinkFading,
}

impl LinkFadingSpec {
    pub fn uniform(link: LinkFading) -> Self {
        Self {
            sd: link,
            sr: link,
            rd: link,
        }
    }

    pub fn link(&self, hop: Hop) -> LinkFading {
        match hop {
            Hop::SourceRelay => self.sr,
            Hop::SourceDestination => self.sd,
            Hop::RelayDestination => self.rd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sd.validate()?;
        self.sr.validate()?;
        self.rd.validate()
    }
}

/// How the Nakagami keyhole MGF argument is scaled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MgfForm {
    /// `₂F₀(m n_t, m n_r;; −s·Ω/m²)`, the exact MGF of `‖H‖²` for
    /// Nakagami-m keyhole factors with per-entry power Ω.
    #[default]
    MomentScaled,
    /// `₂F₀(m n_t, m n_r;; −s·Ω)`, without the `1/m²` factor. Kept for
    /// reproducing published closed forms that drop it.
    Unscaled,
}

/// How per-hop terms are combined into the end-to-end bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Composition {
    /// `Σᵢ P_SD(i)·P_SR + P_2ph(i)·(1 − min(P_SR, 1))`.
    #[default]
    Selective,
    /// `Σᵢ P_SD(i)·P_SR + P_2ph(i)`, the high-SNR form with `1 − P_SR ≈ 1`.
    HighSnrUnion,
}

/// Numerical and modelling options shared by the bound routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundOptions {
    pub mgf_form: MgfForm,
    pub composition: Composition,
    /// Gauss–Legendre order for θ; doubled once as a convergence check.
    pub quad_order: usize,
    pub mgf_quad: MgfQuadrature,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            mgf_form: MgfForm::default(),
            composition: Composition::default(),
            quad_order: DEFAULT_QUAD_ORDER,
            mgf_quad: MgfQuadrature::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    AnalyticBound,
    McEstimate,
}

/// SNR-indexed bound or estimate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PepCurve {
    pub snr_db: Vec<f64>,
    /// Raw values; union bounds may exceed 1.
    pub values: Vec<f64>,
    pub kind: CurveKind,
    /// Whether consumers should present the clamped view.
    pub clamped: bool,
}

impl PepCurve {
    pub fn clamped_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min(1.0)).collect()
    }
}

/// `(1/π) ∫₀^{π/2} f(1/sin²θ) dθ` by Gauss–Legendre, doubling the order
/// until two successive estimates agree to [`CRAIG_TOLERANCE`].
///
/// Integrates in `u` with `θ = (π/2)u²`: an MGF decaying like `x^{−k}`
/// leaves a `θ^{2k}` endpoint singularity, which becomes `u^{4k+1}`.
pub fn craig_integral<F>(mut f: F, quad_order: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if quad_order == 0 {
        return Err(Error::invalid("quadrature order must be at least 1"));
    }
    let mut eval = |n: usize| -> Result<f64> {
        let rule = cached_rule(RuleKind::LegendreOnInterval, n)?;
        let mut acc = 0.0;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            // map [−1, 1] onto (0, 1); dθ = π u du
            let u = 0.5 * (t + 1.0);
            let sin = (FRAC_PI_2 * u * u).sin();
            acc += w * u * f(1.0 / (sin * sin))?;
        }
        Ok(acc * 0.5)
    };
    let mut order = quad_order;
    let mut coarse = eval(order)?;
    for _ in 0..MAX_ORDER_DOUBLINGS {
        let fine = eval(2 * order)?;
        if (fine - coarse).abs() <= CRAIG_TOLERANCE * fine.abs() {
            return Ok(fine);
        }
        order *= 2;
        coarse = fine;
    }
    Err(Error::numerical(format!(
        "Craig integral did not converge up to {} nodes",
        order
    )))
}

/// `(1/π) ∫₀^{π/2} mgf(c / sin²θ) dθ`.
///
/// With `mgf(x) = e^{−x}` this is `Q(√(2c))`.
pub fn craig_transform<F>(mut mgf: F, c: f64, quad_order: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("Craig argument must be >= 0, got {c}")));
    }
    craig_integral(|w| mgf(c * w), quad_order)
}

/// MGF of `‖H‖²` for one hop, as a function of the Craig argument.
fn hop_mgf(n_tx: u32, n_rx: u32, link: LinkFading, opts: &BoundOptions) -> impl Fn(f64) -> Result<f64> {
    let quad = opts.mgf_quad;
    let form = opts.mgf_form;
    move |s: f64| -> Result<f64> {
        let (nt, nr) = (n_tx as f64, n_rx as f64);
        match link.kind {
            FadingKind::GaussianKeyhole => hyp2f0_neg_with(nt, nr, s * link.omega, quad),
            FadingKind::NakagamiKeyhole => {
                let m = link.m;
                let arg = match form {
                    MgfForm::MomentScaled => s * link.omega / (m * m),
                    MgfForm::Unscaled => s * link.omega,
                };
                hyp2f0_neg_with(m * nt, m * nr, arg, quad)
            }
            FadingKind::IidNakagami => mgf_nakagami_iid(link.m, link.omega, n_tx, n_rx, s),
        }
    }
}

fn check_lambda(lam_min: f64) -> Result<()> {
    if !(lam_min > 0.0) || !lam_min.is_finite() {
        return Err(Error::invalid(format!(
            "lambda_min must be positive, got {lam_min}; identical codewords have PEP 1/2"
        )));
    }
    Ok(())
}

/// `c = P·λ/(4·N_tx·η₀)` for a hop.
pub fn craig_argument(topo: &LinkTopology, hop: Hop, lam_min: f64) -> f64 {
    let (power, n_tx, _) = topo.hop_params(hop);
    power * lam_min / (4.0 * n_tx as f64 * topo.eta0)
}

/// Pairwise error bound on a single hop for a codeword pair with
/// difference eigenvalue `lam_min`.
pub fn pairwise_pep_hop(
    topo: &LinkTopology,
    hop: Hop,
    fading: &LinkFadingSpec,
    lam_min: f64,
    opts: &BoundOptions,
) -> Result<f64> {
    check_lambda(lam_min)?;
    topo.validate()?;
    let link = fading.link(hop);
    link.validate()?;
    let (_, n_tx, n_rx) = topo.hop_params(hop);
    let mgf = hop_mgf(n_tx, n_rx, link, opts);
    craig_transform(mgf, craig_argument(topo, hop, lam_min), opts.quad_order)
}

/// Pairwise bound at the destination when the relay forwards: SD and RD
/// observations combine, so their MGFs multiply inside one θ-integral.
pub fn pairwise_pep_two_phase(
    topo: &LinkTopology,
    fading: &LinkFadingSpec,
    lam_min: f64,
    opts: &BoundOptions,
) -> Result<f64> {
    check_lambda(lam_min)?;
    topo.validate()?;
    fading.validate()?;
    let sd = hop_mgf(topo.n_s, topo.n_d, fading.sd, opts);
    let rd = hop_mgf(topo.n_r, topo.n_d, fading.rd, opts);
    let c_sd = craig_argument(topo, Hop::SourceDestination, lam_min);
    let c_rd = craig_argument(topo, Hop::RelayDestination, lam_min);
    craig_integral(|w| Ok(sd(c_sd * w)? * rd(c_rd * w)?), opts.quad_order)
}

/// Per-λ memo so codebooks with many equal-distance pairs integrate once per
/// distinct eigenvalue.
struct PairCache<'a> {
    topo: &'a LinkTopology,
    fading: &'a LinkFadingSpec,
    opts: &'a BoundOptions,
    hop: HashMap<(Hop, u64), f64>,
    two_phase: HashMap<u64, f64>,
}

impl<'a> PairCache<'a> {
    fn new(topo: &'a LinkTopology, fading: &'a LinkFadingSpec, opts: &'a BoundOptions) -> Self {
        Self {
            topo,
            fading,
            opts,
            hop: HashMap::new(),
            two_phase: HashMap::new(),
        }
    }

    fn hop(&mut self, hop: Hop, lam: f64) -> Result<f64> {
        if lam == 0.0 {
            return craig_transform(|_| Ok(1.0), 0.0, self.opts.quad_order);
        }
        if let Some(&v) = self.hop.get(&(hop, lam.to_bits())) {
            return Ok(v);
        }
        let v = pairwise_pep_hop(self.topo, hop, self.fading, lam, self.opts)?;
        self.hop.insert((hop, lam.to_bits()), v);
        Ok(v)
    }

    fn two_phase(&mut self, lam: f64) -> Result<f64> {
        if lam == 0.0 {
            return craig_transform(|_| Ok(1.0), 0.0, self.opts.quad_order);
        }
        if let Some(&v) = self.two_phase.get(&lam.to_bits()) {
            return Ok(v);
        }
        let v = pairwise_pep_two_phase(self.topo, self.fading, lam, self.opts)?;
        self.two_phase.insert(lam.to_bits(), v);
        Ok(v)
    }

    fn relay_union(&mut self, spectrum: &DifferenceSpectrum, x0: usize) -> Result<f64> {
        check_index(spectrum, x0)?;
        let mut total = 0.0;
        for (_, lam) in spectrum.neighbours(x0) {
            total += self.hop(Hop::SourceRelay, lam)?;
        }
        Ok(total)
    }
}

fn check_index(spectrum: &DifferenceSpectrum, x0: usize) -> Result<()> {
    if x0 >= spectrum.codebook_size() {
        return Err(Error::invalid(format!(
            "codeword index {x0} out of range for a codebook of {}",
            spectrum.codebook_size()
        )));
    }
    Ok(())
}

/// Union bound on the relay decoding any codeword other than `x0`. Returned
/// raw; it can exceed 1 at low SNR.
pub fn relay_union_bound(
    topo: &LinkTopology,
    fading: &LinkFadingSpec,
    spectrum: &DifferenceSpectrum,
    x0_index: usize,
    opts: &BoundOptions,
) -> Result<f64> {
    PairCache::new(topo, fading, opts).relay_union(spectrum, x0_index)
}

/// Per-competitor terms of the end-to-end bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerms {
    pub index: usize,
    pub lambda_min: f64,
    /// Direct-link pairwise bound `P_SD(X0 → Xi)`.
    pub direct: f64,
    /// Combined SD+RD pairwise bound when the relay forwards.
    pub two_phase: f64,
}

/// End-to-end bound with its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEndBound {
    pub relay_union: f64,
    pub terms: Vec<PairTerms>,
    pub composition: Composition,
    pub raw: f64,
}

impl EndToEndBound {
    pub fn clamped(&self) -> f64 {
        self.raw.min(1.0)
    }
}

/// Combine pairwise terms with a relay failure probability (bound) `p_sr`.
pub fn compose(terms: &[PairTerms], p_sr: f64, composition: Composition) -> f64 {
    let forward_weight = match composition {
        Composition::Selective => 1.0 - p_sr.min(1.0),
        Composition::HighSnrUnion => 1.0,
    };
    terms
        .iter()
        .map(|t| t.direct * p_sr + t.two_phase * forward_weight)
        .sum()
}

/// Union bound on the destination deciding any codeword other than `x0`.
pub fn end_to_end_pep_bound(
    topo: &LinkTopology,
    fading: &LinkFadingSpec,
    spectrum: &DifferenceSpectrum,
    x0_index: usize,
    opts: &BoundOptions,
) -> Result<EndToEndBound> {
    let mut cache = PairCache::new(topo, fading, opts);
    let relay_union = cache.relay_union(spectrum, x0_index)?;
    let mut terms = Vec::with_capacity(spectrum.codebook_size() - 1);
    for (j, lam) in spectrum.neighbours(x0_index) {
        terms.push(PairTerms {
            index: j,
            lambda_min: lam,
            direct: cache.hop(Hop::SourceDestination, lam)?,
            two_phase: cache.two_phase(lam)?,
        });
    }
    let raw = compose(&terms, relay_union, opts.composition);
    Ok(EndToEndBound {
        relay_union,
        terms,
        composition: opts.composition,
        raw,
    })
}

/// End-to-end bound on the destination deciding `to` when `from` was sent.
/// The relay failure term is still the full union over the codebook, since
/// the relay forwards nothing whichever codeword it got wrong.
pub fn pairwise_end_to_end_bound(
    topo: &LinkTopology,
    fading: &LinkFadingSpec,
    spectrum: &DifferenceSpectrum,
    from: usize,
    to: usize,
    opts: &BoundOptions,
) -> Result<f64> {
    let lam = spectrum.get(from, to).ok_or_else(|| {
        Error::invalid(format!("no codeword pair ({from}, {to}) in the spectrum"))
    })?;
    let mut cache = PairCache::new(topo, fading, opts);
    let relay_union = cache.relay_union(spectrum, from)?;
    let term = PairTerms {
        index: to,
        lambda_min: lam,
        direct: cache.hop(Hop::SourceDestination, lam)?,
        two_phase: cache.two_phase(lam)?,
    };
    Ok(compose(&[term], relay_union, opts.composition))
}
