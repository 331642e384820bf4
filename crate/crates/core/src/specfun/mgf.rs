//! Moment generating functions `E[e^{−s‖H‖²_F}]` of the squared channel
//! Frobenius norm.
//!
//! For a keyhole channel `‖H‖² = U·V` with independent Gamma factors, and
//! conditioning on `U` gives the Gamma-mixture representation
//!
//! ```text
//! ₂F₀(a, b;; −s) = (1/Γ(a)) ∫₀^∞ u^{a−1} e^{−u} (1 + s u)^{−b} du,   s ≥ 0.
//! ```
//!
//! The formal power series of ₂F₀ diverges for every `s ≠ 0`, so everything
//! here goes through the integral.

use statrs::function::gamma::{gamma, ln_gamma};

use super::quadrature::{cached, RuleKind};
use crate::error::{Error, Result};

/// Quadrature settings for [`hyp2f0_neg_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgfQuadrature {
    /// Gauss–Laguerre order tried first; it is compared against twice this
    /// order before being accepted.
    pub laguerre_order: usize,
    /// Gauss–Legendre points per panel in the log-variable fallback.
    pub panel_order: usize,
    /// Panel width in `x = ln u`.
    pub panel_width: f64,
    /// Relative agreement required between the two Laguerre orders.
    pub tolerance: f64,
}

impl Default for MgfQuadrature {
    fn default() -> Self {
        Self {
            laguerre_order: 96,
            panel_order: 16,
            panel_width: 1.0,
            tolerance: 1e-9,
        }
    }
}

impl MgfQuadrature {
    /// Same scheme at twice the resolution in every stage.
    pub fn doubled(self) -> Self {
        Self {
            laguerre_order: 2 * self.laguerre_order,
            panel_order: 2 * self.panel_order,
            ..self
        }
    }
}

/// Above this `s·a·b` the result is compared against the leading large-`s`
/// asymptotic term.
const ASYMPTOTIC_GUARD: f64 = 1e6;

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

/// `₂F₀(a, b;; −s)` for `a, b > 0`, `s ≥ 0`, with default quadrature.
pub fn hyp2f0_neg(a: f64, b: f64, s: f64) -> Result<f64> {
    hyp2f0_neg_with(a, b, s, MgfQuadrature::default())
}

pub fn hyp2f0_neg_with(a: f64, b: f64, s: f64, quad: MgfQuadrature) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "2F0 shape parameters must be positive and finite, got a={a}, b={b}"
        )));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!(
            "2F0(a, b;; -s) is only defined here for finite s >= 0, got s={s}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    // Symmetric in (a, b). Put the integer parameter on the Gamma side so the
    // Laguerre integrand stays polynomial-like, otherwise the smaller one.
    let (a, b) = match (is_integer(a), is_integer(b)) {
        (false, true) => (b, a),
        (true, false) => (a, b),
        _ => (a.min(b), a.max(b)),
    };

    let value = match laguerre_route(a, b, s, quad)? {
        Some(v) => v,
        None => log_panel_route(a, b, s, quad)?,
    };
    if !(value > 0.0 && value <= 1.0 + 1e-12) {
        return Err(Error::numerical(format!(
            "2F0({a}, {b};; -{s}) evaluated to {value}, outside (0, 1]"
        )));
    }
    guard_asymptotic(a, b, s, value)?;
    Ok(value.min(1.0))
}

fn laguerre_sum(a: f64, b: f64, s: f64, n: usize) -> Result<f64> {
    let rule = cached(RuleKind::LaguerreOnHalfline, n)?;
    let lg = ln_gamma(a);
    Ok(rule.integrate(|u| ((a - 1.0) * u.ln() - b * (s * u).ln_1p() - lg).exp()))
}

/// Plain Gauss–Laguerre at two orders; `None` when they disagree.
fn laguerre_route(a: f64, b: f64, s: f64, quad: MgfQuadrature) -> Result<Option<f64>> {
    let coarse = laguerre_sum(a, b, s, quad.laguerre_order)?;
    let fine = laguerre_sum(a, b, s, 2 * quad.laguerre_order)?;
    if (fine - coarse).abs() <= quad.tolerance * fine.abs() {
        Ok(Some(fine))
    } else {
        Ok(None)
    }
}

/// Composite Gauss–Legendre in `x = ln u`.
///
/// In the log variable the integrand `exp(a x − eˣ − b ln(1 + s eˣ))` is a
/// smooth bump whose features have width O(1) for every `s`, so fixed-width
/// panels resolve it uniformly. The left cutoff tracks `−ln s` where the
/// `(1 + s u)` factor switches on.
fn log_panel_route(a: f64, b: f64, s: f64, quad: MgfQuadrature) -> Result<f64> {
    let lo = -s.max(1.0).ln() - (36.0 + b * (2.0 + a).ln()) / a - 1.0;
    let hi = (1000.0 + 20.0 * a).ln();
    let panels = ((hi - lo) / quad.panel_width).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    let rule = cached(RuleKind::LegendreOnInterval, quad.panel_order)?;
    let lg = ln_gamma(a);
    let half = 0.5 * width;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * width;
        let panel: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| {
                let x = mid + half * t;
                let u = x.exp();
                w * (a * x - u - b * (s * u).ln_1p() - lg).exp()
            })
            .sum();
        total += half * panel;
    }
    Ok(total)
}

/// Leading term of `₂F₀(a, b;; −s)` as `s → ∞` for `a ≠ b`:
/// `Γ(|b−a|)/Γ(max) · s^{−min}`.
pub fn hyp2f0_neg_asymptotic(a: f64, b: f64, s: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    gamma(hi - lo) / gamma(hi) * s.powf(-lo)
}

fn guard_asymptotic(a: f64, b: f64, s: f64, value: f64) -> Result<()> {
    if s * a * b <= ASYMPTOTIC_GUARD || (a - b).abs() < 1.0 {
        return Ok(());
    }
    let lead = hyp2f0_neg_asymptotic(a, b, s);
    let ratio = value / lead;
    if !(0.5..=2.0).contains(&ratio) {
        return Err(Error::numerical(format!(
            "2F0({a}, {b};; -{s}) = {value:e} disagrees with its asymptote {lead:e}"
        )));
    }
    Ok(())
}

fn check_count(name: &str, n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid(format!("{name} must be a positive antenna count")));
    }
    Ok(())
}

fn check_m(name: &str, m: f64) -> Result<()> {
    if !(m >= 0.5) || !m.is_finite() {
        return Err(Error::domain(format!(
            "{name} = {m} violates the Nakagami domain m_T ≥ 0.50"
        )));
    }
    Ok(())
}

/// MGF of `‖H‖²_F` for a Gaussian keyhole channel with `n_t` transmit and
/// `n_r` receive antennas: `₂F₀(n_t, n_r;; −s)`.
pub fn mgf_gaussian_keyhole(n_t: u32, n_r: u32, s: f64) -> Result<f64> {
    check_count("n_t", n_t)?;
    check_count("n_r", n_r)?;
    hyp2f0_neg(n_t as f64, n_r as f64, s)
}

/// MGF of `‖H‖²_F` for a unit-variance Nakagami-m keyhole channel:
/// `₂F₀(m_t n_t, m_r n_r;; −s/(m_t m_r))`.
pub fn mgf_nakagami_keyhole(m_t: f64, m_r: f64, n_t: u32, n_r: u32, s: f64) -> Result<f64> {
    check_m("m_t", m_t)?;
    check_m("m_r", m_r)?;
    check_count("n_t", n_t)?;
    check_count("n_r", n_r)?;
    hyp2f0_neg(m_t * n_t as f64, m_r * n_r as f64, s / (m_t * m_r))
}

/// MGF of `‖H‖²_F` when all `n_t·n_r` entries are independent Nakagami-m with
/// spread `omega`: `(1 + s·omega/m)^{−m n_t n_r}`.
pub fn mgf_nakagami_iid(m: f64, omega: f64, n_t: u32, n_r: u32, s: f64) -> Result<f64> {
    check_m("m", m)?;
    check_count("n_t", n_t)?;
    check_count("n_r", n_r)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("omega must be positive, got {omega}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("MGF argument must be >= 0, got {s}")));
    }
    let k = m * (n_t * n_r) as f64;
    Ok((-k * (s * omega / m).ln_1p()).exp())
}
