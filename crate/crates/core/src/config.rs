//! TOML run configuration.
//!
//! Every key is optional. A missing key takes the default listed in
//! [`RunConfig::default`]; unknown and duplicate keys are rejected.
//!
//! ```toml
//! seed = 7
//!
//! [topology]
//! n_s = 2
//! n_r = 2
//! n_d = 2
//! eta0 = 1.0
//! p1_over_p0 = 1.0
//!
//! [codebook]
//! constellation = "bpsk"
//!
//! [fading]            # every link, unless overridden below
//! kind = "nakagami-keyhole"
//! m = 2.0
//! omega = 2.0
//!
//! [fading.rd]         # per-link override, any subset of kind/m/omega
//! m = 3.0
//!
//! [bound]
//! mgf_form = "moment-scaled"
//! composition = "selective"
//! quad_order = 64
//! clamp = false
//!
//! [simulation]
//! strategy = "genie-sdf"
//! trials = 100000
//! pairwise = [0, 1]
//!
//! [sweep]
//! mode = "both"
//! snr_start = 0.0
//! snr_stop = 24.0
//! snr_step = 2.0      # or: snr_db = [0.0, 5.0, 10.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::{build_alamouti_codebook, Codebook, Constellation};
use crate::error::{Error, Result};
use crate::fading::FadingKind;
use crate::pepbound::{
    BoundOptions, Composition, LinkFading, LinkFadingSpec, LinkTopology, MgfForm, DEFAULT_QUAD_ORDER,
};
use crate::simkit::{CodewordPair, ErrorMetric, SimConfig, Strategy, DEFAULT_RELAY_MARGIN};

pub const DEFAULT_TRIALS: u64 = 100_000;
const MAX_GRID_POINTS: usize = 100_000;

/// Which curves a sweep produces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
    #[default]
    Both,
}

impl SweepMode {
    pub fn analytic(self) -> bool {
        matches!(self, SweepMode::Analytic | SweepMode::Both)
    }

    pub fn monte_carlo(self) -> bool {
        matches!(self, SweepMode::MonteCarlo | SweepMode::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySettings {
    pub n_s: u32,
    pub n_r: u32,
    pub n_d: u32,
    pub eta0: f64,
    pub p1_over_p0: f64,
}

impl TopologySettings {
    pub fn at_snr_db(&self, snr_db: f64) -> LinkTopology {
        LinkTopology::at_snr_db(self.n_s, self.n_r, self.n_d, self.eta0, self.p1_over_p0, snr_db)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSettings {
    pub mgf_form: MgfForm,
    pub composition: Composition,
    pub quad_order: usize,
    pub clamp: bool,
}

impl BoundSettings {
    pub fn options(&self) -> BoundOptions {
        BoundOptions {
            mgf_form: self.mgf_form,
            composition: self.composition,
            quad_order: self.quad_order,
            ..BoundOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub strategy: Strategy,
    pub trials: u64,
    pub pairwise: Option<CodewordPair>,
    pub x0_index: usize,
    pub metric: ErrorMetric,
    pub relay_margin: f64,
    pub noise_scale: f64,
}

/// Fully resolved configuration. Serializes losslessly so it can be echoed
/// into run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub topology: TopologySettings,
    pub constellation: Constellation,
    pub fading: LinkFadingSpec,
    pub bound: BoundSettings,
    pub simulation: SimulationSettings,
    pub mode: SweepMode,
    pub snr_db: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            topology: TopologySettings {
                n_s: 2,
                n_r: 2,
                n_d: 2,
                eta0: 1.0,
                p1_over_p0: 1.0,
            },
            constellation: Constellation::Bpsk,
            fading: LinkFadingSpec::uniform(LinkFading::GAUSSIAN_KEYHOLE),
            bound: BoundSettings {
                mgf_form: MgfForm::default(),
                composition: Composition::default(),
                quad_order: DEFAULT_QUAD_ORDER,
                clamp: false,
            },
            simulation: SimulationSettings {
                strategy: Strategy::default(),
                trials: DEFAULT_TRIALS,
                pairwise: None,
                x0_index: 0,
                metric: ErrorMetric::default(),
                relay_margin: DEFAULT_RELAY_MARGIN,
                noise_scale: 1.0,
            },
            mode: SweepMode::default(),
            snr_db: snr_grid(0.0, 24.0, 2.0).expect("default grid is valid"),
        }
    }
}

impl RunConfig {
    pub fn codebook(&self) -> Result<Codebook> {
        build_alamouti_codebook(&self.constellation.points())
    }

    /// Topology at the first grid point; simulation rescales powers per point.
    pub fn topology_template(&self) -> LinkTopology {
        self.topology.at_snr_db(self.snr_db.first().copied().unwrap_or(0.0))
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.topology_template(), self.fading, self.codebook()?);
        cfg.strategy = self.simulation.strategy;
        cfg.snr_db = self.snr_db.clone();
        cfg.trials = self.simulation.trials;
        cfg.seed = self.seed;
        cfg.pairwise_pair = self.simulation.pairwise;
        cfg.x0_index = self.simulation.x0_index;
        cfg.metric = self.simulation.metric;
        cfg.relay_margin = self.simulation.relay_margin;
        cfg.noise_scale = self.simulation.noise_scale;
        Ok(cfg)
    }

    /// Checks every resolved value, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        for (key, n) in [("topology.n_s", t.n_s), ("topology.n_r", t.n_r), ("topology.n_d", t.n_d)] {
            if n == 0 {
                return Err(Error::config(key, "antenna count must be at least 1"));
            }
        }
        if !(t.eta0 > 0.0) || !t.eta0.is_finite() {
            return Err(Error::config("topology.eta0", format!("must be positive, got {}", t.eta0)));
        }
        if !(t.p1_over_p0 >= 0.0) || !t.p1_over_p0.is_finite() {
            return Err(Error::config(
                "topology.p1_over_p0",
                format!("must be non-negative, got {}", t.p1_over_p0),
            ));
        }
        for (key, link) in [
            ("fading.sd", self.fading.sd),
            ("fading.sr", self.fading.sr),
            ("fading.rd", self.fading.rd),
        ] {
            check_link(key, &link)?;
        }
        if self.bound.quad_order == 0 {
            return Err(Error::config("bound.quad_order", "must be at least 1"));
        }
        let s = &self.simulation;
        if s.trials == 0 {
            return Err(Error::config("simulation.trials", "must be at least 1"));
        }
        if !(s.relay_margin >= 0.0) || !s.relay_margin.is_finite() {
            return Err(Error::config("simulation.relay_margin", "must be finite and >= 0"));
        }
        if !(s.noise_scale >= 0.0) || !s.noise_scale.is_finite() {
            return Err(Error::config("simulation.noise_scale", "must be finite and >= 0"));
        }
        let size = self.constellation.points().len().pow(2);
        if s.x0_index >= size {
            return Err(Error::config(
                "simulation.x0_index",
                format!("{} out of range for {size} codewords", s.x0_index),
            ));
        }
        if let Some(p) = s.pairwise {
            if p.sent >= size || p.counted >= size || p.sent == p.counted {
                return Err(Error::config(
                    "simulation.pairwise",
                    format!("({}, {}) must be two distinct indices below {size}", p.sent, p.counted),
                ));
            }
        }
        if self.mode.monte_carlo() && t.n_r != t.n_s {
            return Err(Error::config(
                "topology.n_r",
                "simulation needs n_r = n_s so the relay can re-send source codewords",
            ));
        }
        if self.mode.monte_carlo() && t.n_s != 2 {
            return Err(Error::config("topology.n_s", "Alamouti codewords need n_s = 2"));
        }
        check_grid(&self.snr_db)
    }

    /// Parses TOML text and resolves defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<root>", e.to_string().trim_end().to_string()))?;
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "<root>".to_string() } else { path };
            Error::config(path, e.into_inner().to_string().trim_end().to_string())
        })?;
        raw.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { path: key, message } => Error::Config {
                path: key,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        RawConfig::from_resolved(self).to_toml_string()
    }
}

fn check_link(key: &str, link: &LinkFading) -> Result<()> {
    if !(link.m >= crate::fading::NAKAGAMI_M_MIN) || !link.m.is_finite() {
        return Err(Error::config(
            format!("{key}.m"),
            format!("m = {} is below the Nakagami limit m_T ≥ 0.50", link.m),
        ));
    }
    if !(link.omega > 0.0) || !link.omega.is_finite() {
        return Err(Error::config(
            format!("{key}.omega"),
            format!("must be positive, got {}", link.omega),
        ));
    }
    if link.kind == FadingKind::GaussianKeyhole && (link.m != 1.0 || link.omega != 1.0) {
        return Err(Error::config(
            format!("{key}.kind"),
            "gaussian-keyhole links have m = 1 and omega = 1; use nakagami-keyhole otherwise",
        ));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("sweep.snr_db", "SNR grid is empty"));
    }
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::config("sweep.snr_db", "SNR values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("sweep.snr_db", "SNR grid must be strictly ascending"));
    }
    Ok(())
}

/// `start, start + step, …` up to `stop` inclusive (with a small slack for
/// round-off).
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || !(step > 0.0) || !step.is_finite() {
        return Err(Error::config(
            "sweep.snr_step",
            format!("need finite start/stop and step > 0, got {start}..{stop} step {step}"),
        ));
    }
    if stop < start {
        return Err(Error::config("sweep.snr_stop", format!("{stop} is below snr_start {start}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID_POINTS {
        return Err(Error::config("sweep.snr_step", format!("grid would have {count} points")));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    topology: RawTopology,
    #[serde(default)]
    codebook: RawCodebook,
    #[serde(default)]
    fading: RawFading,
    #[serde(default)]
    bound: RawBound,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    n_s: Option<u32>,
    n_r: Option<u32>,
    n_d: Option<u32>,
    eta0: Option<f64>,
    p1_over_p0: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCodebook {
    constellation: Option<Constellation>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    kind: Option<FadingKind>,
    m: Option<f64>,
    omega: Option<f64>,
}

impl RawLink {
    fn over(self, base: RawLink) -> RawLink {
        RawLink {
            kind: self.kind.or(base.kind),
            m: self.m.or(base.m),
            omega: self.omega.or(base.omega),
        }
    }

    fn resolve(self) -> LinkFading {
        LinkFading {
            kind: self.kind.unwrap_or(FadingKind::GaussianKeyhole),
            m: self.m.unwrap_or(1.0),
            omega: self.omega.unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFading {
    kind: Option<FadingKind>,
    m: Option<f64>,
    omega: Option<f64>,
    sd: Option<RawLink>,
    sr: Option<RawLink>,
    rd: Option<RawLink>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBound {
    mgf_form: Option<MgfForm>,
    composition: Option<Composition>,
    quad_order: Option<usize>,
    clamp: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    strategy: Option<Strategy>,
    trials: Option<u64>,
    pairwise: Option<[usize; 2]>,
    x0_index: Option<usize>,
    metric: Option<ErrorMetric>,
    relay_margin: Option<f64>,
    noise_scale: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    mode: Option<SweepMode>,
    snr_db: Option<Vec<f64>>,
    snr_start: Option<f64>,
    snr_stop: Option<f64>,
    snr_step: Option<f64>,
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        let d = RunConfig::default();
        let t = self.topology;
        let base = RawLink {
            kind: self.fading.kind,
            m: self.fading.m,
            omega: self.fading.omega,
        };
        let link = |o: Option<RawLink>| o.unwrap_or_default().over(base).resolve();
        let sim = self.simulation;
        let sweep = self.sweep;
        let has_range = sweep.snr_start.is_some() || sweep.snr_stop.is_some() || sweep.snr_step.is_some();
        let snr_db = match (sweep.snr_db, has_range) {
            (Some(_), true) => {
                return Err(Error::config(
                    "sweep.snr_db",
                    "give either snr_db or snr_start/snr_stop/snr_step, not both",
                ))
            }
            (Some(grid), false) => grid,
            (None, _) => snr_grid(
                sweep.snr_start.unwrap_or(0.0),
                sweep.snr_stop.unwrap_or(24.0),
                sweep.snr_step.unwrap_or(2.0),
            )?,
        };
        let cfg = RunConfig {
            seed: self.seed.unwrap_or(d.seed),
            topology: TopologySettings {
                n_s: t.n_s.unwrap_or(d.topology.n_s),
                n_r: t.n_r.unwrap_or(d.topology.n_r),
                n_d: t.n_d.unwrap_or(d.topology.n_d),
                eta0: t.eta0.unwrap_or(d.topology.eta0),
                p1_over_p0: t.p1_over_p0.unwrap_or(d.topology.p1_over_p0),
            },
            constellation: self.codebook.constellation.unwrap_or(d.constellation),
            fading: LinkFadingSpec {
                sd: link(self.fading.sd),
                sr: link(self.fading.sr),
                rd: link(self.fading.rd),
            },
            bound: BoundSettings {
                mgf_form: self.bound.mgf_form.unwrap_or(d.bound.mgf_form),
                composition: self.bound.composition.unwrap_or(d.bound.composition),
                quad_order: self.bound.quad_order.unwrap_or(d.bound.quad_order),
                clamp: self.bound.clamp.unwrap_or(d.bound.clamp),
            },
            simulation: SimulationSettings {
                strategy: sim.strategy.unwrap_or(d.simulation.strategy),
                trials: sim.trials.unwrap_or(d.simulation.trials),
                pairwise: sim.pairwise.map(|[sent, counted]| CodewordPair { sent, counted }),
                x0_index: sim.x0_index.unwrap_or(d.simulation.x0_index),
                metric: sim.metric.unwrap_or(d.simulation.metric),
                relay_margin: sim.relay_margin.unwrap_or(d.simulation.relay_margin),
                noise_scale: sim.noise_scale.unwrap_or(d.simulation.noise_scale),
            },
            mode: sweep.mode.unwrap_or(d.mode),
            snr_db,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_resolved(cfg: &RunConfig) -> Self {
        let link = |l: LinkFading| {
            Some(RawLink {
                kind: Some(l.kind),
                m: Some(l.m),
                omega: Some(l.omega),
            })
        };
        let s = &cfg.simulation;
        RawConfig {
            seed: Some(cfg.seed),
            topology: RawTopology {
                n_s: Some(cfg.topology.n_s),
                n_r: Some(cfg.topology.n_r),
                n_d: Some(cfg.topology.n_d),
                eta0: Some(cfg.topology.eta0),
                p1_over_p0: Some(cfg.topology.p1_over_p0),
            },
            codebook: RawCodebook {
                constellation: Some(cfg.constellation),
            },
            fading: RawFading {
                kind: None,
                m: None,
                omega: None,
                sd: link(cfg.fading.sd),
                sr: link(cfg.fading.sr),
                rd: link(cfg.fading.rd),
            },
            bound: RawBound {
                mgf_form: Some(cfg.bound.mgf_form),
                composition: Some(cfg.bound.composition),
                quad_order: Some(cfg.bound.quad_order),
                clamp: Some(cfg.bound.clamp),
            },
            simulation: RawSimulation {
                strategy: Some(s.strategy),
                trials: Some(s.trials),
                pairwise: s.pairwise.map(|p| [p.sent, p.counted]),
                x0_index: Some(s.x0_index),
                metric: Some(s.metric),
                relay_margin: Some(s.relay_margin),
                noise_scale: Some(s.noise_scale),
            },
            sweep: RawSweep {
                mode: Some(cfg.mode),
                snr_db: Some(cfg.snr_db.clone()),
                snr_start: None,
                snr_stop: None,
                snr_step: None,
            },
        }
    }

    fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("resolved config always serializes")
    }
}
