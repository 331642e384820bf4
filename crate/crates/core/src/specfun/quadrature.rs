use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// Gauss–Legendre mapped to a finite interval.
    LegendreOnInterval,
    /// Gauss–Laguerre for `∫₀^∞ e^{−t} f(t) dt`.
    LaguerreOnHalfline,
}

/// Nodes and positive weights of a Gaussian quadrature rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const NEWTON_EPS: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights on [−1, 1], ascending.
fn legendre_reference(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess for the i-th largest root.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= NEWTON_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "Gauss-Legendre root {i} of order {n} did not converge"
            )));
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// n-point Gauss–Legendre rule on `[lo, hi]`; exact for polynomials of
/// degree ≤ 2n − 1.
pub fn legendre_rule(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("quadrature order must be at least 1"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!(
            "quadrature interval [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    let reference = cached(RuleKind::LegendreOnInterval, n)?;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Ok(QuadratureRule {
        nodes: reference.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: reference.weights.iter().map(|&w| half * w).collect(),
        kind: RuleKind::LegendreOnInterval,
    })
}

/// Evaluates `L_n(x)` and `L_{n−1}(x)` by recurrence, rescaling on the fly.
/// Returns `(p_n, p_{n−1}, ln_scale)` with `L_k(x) = p_k · e^{ln_scale}`.
fn laguerre_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    let mut ln_scale = 0.0;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > 1e150 {
            cur /= mag;
            prev /= mag;
            ln_scale += mag.ln();
        }
    }
    (cur, prev, ln_scale)
}

/// Gauss–Laguerre nodes/weights for weight `e^{−t}` on `[0, ∞)`.
///
/// Nodes whose weight underflows to zero are dropped. Weights carry ~1e-12
/// relative error from recurrence round-off at orders in the hundreds.
fn laguerre_reference(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        // Asymptotic initial guesses (Stroud & Secrest style).
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev, _) = laguerre_scaled(n, z);
            // x L_n' = n (L_n − L_{n−1})
            let dz = p * z / (nf * (p - p_prev));
            z -= dz;
            // recurrence round-off near the root is ~1e-14 relative at n ~ 100
            if dz.abs() <= 1e-13 * z.abs() {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::numerical(format!(
                "Gauss-Laguerre root {i} of order {n} did not converge"
            )));
        }
        if let Some(&last) = nodes.last() {
            if z <= last {
                return Err(Error::numerical(format!(
                    "Gauss-Laguerre order {n}: root {i} out of order"
                )));
            }
        }
        let (p, p_prev, ln_scale) = laguerre_scaled(n, z);
        // L_{n+1}(z) = ((2n + 1 − z) L_n − n L_{n−1}) / (n + 1)
        let next = ((2.0 * nf + 1.0 - z) * p - nf * p_prev) / (nf + 1.0);
        let ln_w = z.ln() - 2.0 * ((nf + 1.0).ln() + next.abs().ln() + ln_scale);
        nodes.push(z);
        weights.push(ln_w.exp());
    }
    let keep = weights.iter().take_while(|&&w| w > 0.0).count();
    nodes.truncate(keep);
    weights.truncate(keep);
    Ok((nodes, weights))
}

/// n-point Gauss–Laguerre rule (weight function `e^{−t}`).
pub fn laguerre_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::invalid("quadrature order must be at least 1"));
    }
    Ok((*cached(RuleKind::LaguerreOnHalfline, n)?).clone())
}

type RuleCache = Mutex<HashMap<(RuleKind, usize), Arc<QuadratureRule>>>;

/// Reference rules (Legendre on [−1, 1], Laguerre on [0, ∞)) are built once
/// per order and shared.
pub(crate) fn cached(kind: RuleKind, n: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&(kind, n)) {
        return Ok(Arc::clone(rule));
    }
    let (nodes, weights) = match kind {
        RuleKind::LegendreOnInterval => legendre_reference(n)?,
        RuleKind::LaguerreOnHalfline => laguerre_reference(n)?,
    };
    let rule = Arc::new(QuadratureRule {
        nodes,
        weights,
        kind,
    });
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert((kind, n), Arc::clone(&rule));
    Ok(rule)
}
