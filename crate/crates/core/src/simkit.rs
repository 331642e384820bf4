//! Monte Carlo simulation of two-phase selective decode-and-forward.
//!
//! Phase 1: the source sends codeword `X₀` to the relay (SR) and the
//! destination (SD). Phase 2: depending on the [`Strategy`], the relay
//! re-sends a codeword over RD and the destination ML-decodes from every
//! observation it holds. All channels are known at the receivers.
//!
//! Trials are split into fixed-size chunks; chunk `c` of SNR point `k` draws
//! from the stream `(seed, k·2⁴⁰ + c)`, so estimates do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, ComplexMatrix};
use crate::error::{Error, Result};
use crate::fading::{sample_channel_unchecked, ChannelRealization, KeyholeSpec, SeededRng};
use crate::pepbound::{LinkFadingSpec, LinkTopology};
use crate::Complex64;

/// Trials per deterministic RNG stream.
pub const TRIALS_PER_CHUNK: u64 = 8192;
const SNR_STREAM_SHIFT: u32 = 40;
/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Relay and destination behaviour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// The relay forwards `X₀` only when its decision is correct.
    #[default]
    GenieSdf,
    /// The relay always forwards its own decision; the destination combines
    /// SD and RD as if both carried the same codeword.
    DfAlwaysForward,
    /// The relay forwards its decision when the gap between the two best ML
    /// metrics is at least `relay_margin · η₀`; the destination combines
    /// whenever the relay spoke.
    SdfMlCombining,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::GenieSdf,
        Strategy::DfAlwaysForward,
        Strategy::SdfMlCombining,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::GenieSdf => "genie-sdf",
            Strategy::DfAlwaysForward => "df-always-forward",
            Strategy::SdfMlCombining => "sdf-ml-combining",
        }
    }
}

/// What counts as an error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// Destination decision differs from the sent codeword.
    #[default]
    Codeword,
    /// Bit errors between the index labels; each bit is one Bernoulli unit.
    Bit,
}

/// Codeword pair `(sent, counted)` for pairwise estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodewordPair {
    pub sent: usize,
    pub counted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Antennas, noise and `p1/p0`; powers are rescaled for each SNR point.
    pub topo: LinkTopology,
    pub fading: LinkFadingSpec,
    pub codebook: Codebook,
    pub strategy: Strategy,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// When set, `sent` is always transmitted and only decisions equal to
    /// `counted` are errors.
    pub pairwise_pair: Option<CodewordPair>,
    /// Transmitted codeword outside pairwise mode.
    pub x0_index: usize,
    pub metric: ErrorMetric,
    /// Forwarding threshold for [`Strategy::SdfMlCombining`], in units of η₀.
    pub relay_margin: f64,
    /// Multiplies the noise variance only; 0 gives noiseless runs.
    pub noise_scale: f64,
}

pub const DEFAULT_RELAY_MARGIN: f64 = 2.0;

impl SimConfig {
    /// Defaults around a codebook: genie-SDF, codeword errors, `X₀ = 0`.
    pub fn new(topo: LinkTopology, fading: LinkFadingSpec, codebook: Codebook) -> Self {
        Self {
            topo,
            fading,
            codebook,
            strategy: Strategy::default(),
            snr_db: Vec::new(),
            trials: 1,
            seed: 0,
            pairwise_pair: None,
            x0_index: 0,
            metric: ErrorMetric::default(),
            relay_margin: DEFAULT_RELAY_MARGIN,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topo.validate()?;
        self.fading.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid contains a non-finite value"));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("SNR grid must be strictly ascending"));
        }
        let n_s = self.topo.n_s as usize;
        if self.codebook.n_tx() != n_s {
            return Err(Error::invalid(format!(
                "codewords have {} rows but n_s = {n_s}",
                self.codebook.n_tx()
            )));
        }
        if self.topo.n_r != self.topo.n_s {
            return Err(Error::invalid(format!(
                "the relay re-sends source codewords, so n_r must equal n_s (got n_r = {}, n_s = {n_s})",
                self.topo.n_r
            )));
        }
        let size = self.codebook.len();
        if size < 2 {
            return Err(Error::invalid("simulation needs at least two codewords"));
        }
        if self.x0_index >= size {
            return Err(Error::invalid(format!(
                "x0_index {} out of range for {size} codewords",
                self.x0_index
            )));
        }
        if let Some(pair) = self.pairwise_pair {
            if pair.sent >= size || pair.counted >= size || pair.sent == pair.counted {
                return Err(Error::invalid(format!(
                    "pairwise pair ({}, {}) must be two distinct indices below {size}",
                    pair.sent, pair.counted
                )));
            }
        }
        if self.metric == ErrorMetric::Bit && self.codebook.bits_per_codeword().is_none() {
            return Err(Error::invalid(
                "bit metric needs a codebook whose size is a power of two",
            ));
        }
        if !(self.relay_margin >= 0.0) || !self.relay_margin.is_finite() {
            return Err(Error::invalid("relay_margin must be finite and >= 0"));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::invalid("noise_scale must be finite and >= 0"));
        }
        Ok(())
    }

    fn sent_index(&self) -> usize {
        self.pairwise_pair.map_or(self.x0_index, |p| p.sent)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub sent: usize,
    pub relay_decision: usize,
    pub relay_correct: bool,
    /// Whether the relay transmitted in phase 2, i.e. whether the
    /// destination had an RD observation.
    pub relay_forwarded: bool,
    pub dest_decision: usize,
    pub error: bool,
    /// Bit errors between sent and decided labels (0 without bit labels).
    pub bit_errors: u32,
}

/// Error-rate estimate at one SNR with a 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PepEstimate {
    pub snr_db: f64,
    pub errors: u64,
    /// Bernoulli units: trials, or trials × bits for the bit metric.
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PepEstimate {
    pub fn from_counts(snr_db: f64, errors: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("cannot estimate a rate from zero trials"));
        }
        if errors > trials {
            return Err(Error::invalid(format!("{errors} errors exceed {trials} trials")));
        }
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        Ok(Self {
            snr_db,
            errors,
            trials,
            rate: errors as f64 / trials as f64,
            ci_low,
            ci_high,
        })
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `Y = √(power/n_tx)·H·X + W` with `E|w|² = eta0` per entry.
pub fn transmit(
    x: &ComplexMatrix,
    h: &ChannelRealization,
    power: f64,
    n_tx: u32,
    eta0: f64,
    rng: &mut SeededRng,
) -> Result<ComplexMatrix> {
    if h.h.cols() != x.rows() || n_tx as usize != x.rows() {
        return Err(Error::invalid(format!(
            "cannot send a {}x{} codeword from {n_tx} antennas over a {}x{} channel",
            x.rows(),
            x.cols(),
            h.h.rows(),
            h.h.cols()
        )));
    }
    if !(power >= 0.0) || !(eta0 >= 0.0) {
        return Err(Error::invalid("power and noise level must be non-negative"));
    }
    let mut y = ComplexMatrix::zeros(h.h.rows(), x.cols());
    transmit_into(x, &h.h, amplitude(power, n_tx), eta0, rng, &mut y);
    Ok(y)
}

fn amplitude(power: f64, n_tx: u32) -> f64 {
    (power / n_tx as f64).sqrt()
}

fn transmit_into(
    x: &ComplexMatrix,
    h: &ComplexMatrix,
    amp: f64,
    eta0: f64,
    rng: &mut SeededRng,
    y: &mut ComplexMatrix,
) {
    h.matmul_into(x, y);
    for z in y.entries_mut() {
        *z *= amp;
    }
    if eta0 > 0.0 {
        for z in y.entries_mut() {
            *z += rng.complex_gaussian(eta0);
        }
    }
}

/// One received block together with what the receiver knows about it.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub y: &'a ComplexMatrix,
    pub h: &'a ComplexMatrix,
    pub power: f64,
    pub n_tx: u32,
}

/// `argmin_X Σ ‖Y − √(P/N)·H·X‖²_F`; ties go to the lowest index.
pub fn ml_decode(observations: &[Observation<'_>], codebook: &Codebook) -> Result<usize> {
    if observations.is_empty() {
        return Err(Error::invalid("ML decoding needs at least one observation"));
    }
    for obs in observations {
        if obs.h.cols() != codebook.n_tx()
            || obs.y.rows() != obs.h.rows()
            || obs.y.cols() != codebook.timeslots()
        {
            return Err(Error::invalid(format!(
                "observation {}x{} with channel {}x{} does not fit {}x{} codewords",
                obs.y.rows(),
                obs.y.cols(),
                obs.h.rows(),
                obs.h.cols(),
                codebook.n_tx(),
                codebook.timeslots()
            )));
        }
    }
    Ok(ml_search(observations, codebook).index)
}

struct MlResult {
    index: usize,
    best: f64,
    runner_up: f64,
}

fn ml_search(observations: &[Observation<'_>], codebook: &Codebook) -> MlResult {
    let mut best = f64::INFINITY;
    let mut runner_up = f64::INFINITY;
    let mut index = 0;
    for (k, x) in codebook.codewords().iter().enumerate() {
        let metric: f64 = observations.iter().map(|o| residual(o, x)).sum();
        if metric < best {
            runner_up = best;
            best = metric;
            index = k;
        } else if metric < runner_up {
            runner_up = metric;
        }
    }
    MlResult {
        index,
        best,
        runner_up,
    }
}

/// `‖Y − a·H·X‖²_F` without allocating.
fn residual(obs: &Observation<'_>, x: &ComplexMatrix) -> f64 {
    let a = amplitude(obs.power, obs.n_tx);
    let (rows, inner, cols) = (obs.h.rows(), obs.h.cols(), x.cols());
    let (h, xe, y) = (obs.h.entries(), x.entries(), obs.y.entries());
    let mut acc = 0.0;
    for r in 0..rows {
        for t in 0..cols {
            let mut pred = Complex64::new(0.0, 0.0);
            for k in 0..inner {
                pred += h[r * inner + k] * xe[k * cols + t];
            }
            acc += (y[r * cols + t] - pred * a).norm_sqr();
        }
    }
    acc
}

/// Everything a trial needs that does not change within an SNR point.
struct TrialPlan<'a> {
    cfg: &'a SimConfig,
    topo: LinkTopology,
    sr: KeyholeSpec,
    sd: KeyholeSpec,
    rd: KeyholeSpec,
    noise: f64,
}

impl<'a> TrialPlan<'a> {
    fn new(cfg: &'a SimConfig, snr_db: f64) -> Self {
        let topo = cfg.topo.with_snr_db(snr_db);
        Self {
            cfg,
            topo,
            sr: cfg.fading.sr.channel_spec(topo.n_s, topo.n_r),
            sd: cfg.fading.sd.channel_spec(topo.n_s, topo.n_d),
            rd: cfg.fading.rd.channel_spec(topo.n_r, topo.n_d),
            noise: topo.eta0 * cfg.noise_scale,
        }
    }

    fn run(&self, rng: &mut SeededRng) -> TrialOutcome {
        let cfg = self.cfg;
        let cb = &cfg.codebook;
        let topo = &self.topo;
        let sent = cfg.sent_index();
        let x0 = &cb.codewords()[sent];
        let timeslots = cb.timeslots();

        // all three channels are drawn every trial so the stream layout does
        // not depend on the protocol branch
        let h_sr = sample_channel_unchecked(&self.sr, rng).h;
        let h_sd = sample_channel_unchecked(&self.sd, rng).h;
        let h_rd = sample_channel_unchecked(&self.rd, rng).h;

        let mut y_sr = ComplexMatrix::zeros(topo.n_r as usize, timeslots);
        let mut y_sd = ComplexMatrix::zeros(topo.n_d as usize, timeslots);
        let amp0 = amplitude(topo.p0, topo.n_s);
        transmit_into(x0, &h_sr, amp0, self.noise, rng, &mut y_sr);
        transmit_into(x0, &h_sd, amp0, self.noise, rng, &mut y_sd);

        let sr_obs = Observation {
            y: &y_sr,
            h: &h_sr,
            power: topo.p0,
            n_tx: topo.n_s,
        };
        let relay = ml_search(&[sr_obs], cb);
        let relay_correct = relay.index == sent;
        let forwarded = match cfg.strategy {
            Strategy::GenieSdf => relay_correct.then_some(sent),
            Strategy::DfAlwaysForward => Some(relay.index),
            Strategy::SdfMlCombining => {
                let gap = relay.runner_up - relay.best;
                (gap >= cfg.relay_margin * self.noise).then_some(relay.index)
            }
        };

        let sd_obs = Observation {
            y: &y_sd,
            h: &h_sd,
            power: topo.p0,
            n_tx: topo.n_s,
        };
        let dest_decision = match forwarded {
            Some(k) => {
                let mut y_rd = ComplexMatrix::zeros(topo.n_d as usize, timeslots);
                let amp1 = amplitude(topo.p1, topo.n_r);
                transmit_into(&cb.codewords()[k], &h_rd, amp1, self.noise, rng, &mut y_rd);
                let rd_obs = Observation {
                    y: &y_rd,
                    h: &h_rd,
                    power: topo.p1,
                    n_tx: topo.n_r,
                };
                ml_search(&[sd_obs, rd_obs], cb).index
            }
            None => ml_search(&[sd_obs], cb).index,
        };

        let error = match cfg.pairwise_pair {
            Some(pair) => dest_decision == pair.counted,
            None => dest_decision != sent,
        };
        TrialOutcome {
            sent,
            relay_decision: relay.index,
            relay_correct,
            relay_forwarded: forwarded.is_some(),
            dest_decision,
            error,
            bit_errors: cb.bit_errors(sent, dest_decision).unwrap_or(0),
        }
    }
}

/// One protocol run at `snr_db` with fresh SR, SD and RD channels.
pub fn run_sdf_trial(cfg: &SimConfig, snr_db: f64, rng: &mut SeededRng) -> Result<TrialOutcome> {
    cfg.validate()?;
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite"));
    }
    Ok(TrialPlan::new(cfg, snr_db).run(rng))
}

/// Stream id of chunk `chunk` at SNR grid position `point`.
pub fn stream_id(point: usize, chunk: u64) -> u64 {
    ((point as u64) << SNR_STREAM_SHIFT) | chunk
}

/// Error-rate estimates over the configured SNR grid.
pub fn estimate_error_rate(cfg: &SimConfig) -> Result<Vec<PepEstimate>> {
    cfg.validate()?;
    if cfg.trials > (1u64 << SNR_STREAM_SHIFT) {
        return Err(Error::invalid("trials per SNR point exceed 2^40"));
    }
    let units_per_trial = match cfg.metric {
        ErrorMetric::Codeword => 1,
        ErrorMetric::Bit => u64::from(cfg.codebook.bits_per_codeword().unwrap_or(1)),
    };
    let n_chunks = cfg.trials.div_ceil(TRIALS_PER_CHUNK);
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr)| {
            let plan = TrialPlan::new(cfg, snr);
            let errors: u64 = (0..n_chunks)
                .into_par_iter()
                .map(|chunk| {
                    let start = chunk * TRIALS_PER_CHUNK;
                    let count = TRIALS_PER_CHUNK.min(cfg.trials - start);
                    let mut rng = SeededRng::new(cfg.seed, stream_id(point, chunk));
                    (0..count)
                        .map(|_| {
                            let out = plan.run(&mut rng);
                            match cfg.metric {
                                ErrorMetric::Codeword => u64::from(out.error),
                                ErrorMetric::Bit => u64::from(out.bit_errors),
                            }
                        })
                        .sum::<u64>()
                })
                .sum();
            PepEstimate::from_counts(snr, errors, cfg.trials * units_per_trial)
        })
        .collect()
}
