//! SNR sweeps, figure datasets and their on-disk artifacts.
//!
//! Each sweep writes one CSV with the fixed columns in [`CSV_HEADER`] and
//! one JSON [`RunManifest`] listing the CSV files it produced together with
//! the fully resolved configuration behind each of them. Floats are written
//! with 9 significant digits; absent values are empty fields.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::codebook::difference_spectrum;
use crate::config::{RunConfig, SweepMode};
use crate::error::{Error, Result};
use crate::pepbound::{
    end_to_end_pep_bound, pairwise_end_to_end_bound, Composition, CurveKind, LinkFading, LinkFadingSpec,
    MgfForm, PepCurve,
};
use crate::simkit::{estimate_error_rate, Strategy};

pub const CSV_HEADER: [&str; 7] = [
    "snr_db",
    "pep_bound_raw",
    "pep_bound_clamped",
    "pep_mc",
    "ci_low",
    "ci_high",
    "trials",
];

pub const SNR_DEFINITION: &str = "snr_db = 10*log10(p0/eta0), p1 = p1_over_p0*p0";

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub pep_bound_raw: Option<f64>,
    pub pep_bound_clamped: Option<f64>,
    pub pep_mc: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: Option<u64>,
}

impl SweepRow {
    fn empty(snr_db: f64) -> Self {
        Self {
            snr_db,
            pep_bound_raw: None,
            pep_bound_clamped: None,
            pep_mc: None,
            ci_low: None,
            ci_high: None,
            trials: None,
        }
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// CSV text for a sweep, LF line endings.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            fmt_float(r.snr_db),
            fmt_opt(r.pep_bound_raw),
            fmt_opt(r.pep_bound_clamped),
            fmt_opt(r.pep_mc),
            fmt_opt(r.ci_low),
            fmt_opt(r.ci_high),
            r.trials.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

/// Parses CSV produced by [`render_csv`]; the header must match exactly.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::invalid(format!("CSV header: {e}")))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::invalid(format!(
            "CSV header must be `{}`, got `{}`",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::invalid(format!("CSV line {line}: {e}")))?;
        let field = |k: usize| -> Result<Option<f64>> {
            let s = &rec[k];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::invalid(format!("CSV line {line}, column {}: `{s}` is not a number", CSV_HEADER[k])))
        };
        let snr_db = field(0)?
            .ok_or_else(|| Error::invalid(format!("CSV line {line}: snr_db is empty")))?;
        let trials = match &rec[6] {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|_| {
                Error::invalid(format!("CSV line {line}, column trials: `{s}` is not a count"))
            })?),
        };
        rows.push(SweepRow {
            snr_db,
            pep_bound_raw: field(1)?,
            pep_bound_clamped: field(2)?,
            pep_mc: field(3)?,
            ci_low: field(4)?,
            ci_high: field(5)?,
            trials,
        });
    }
    Ok(rows)
}

/// Analytic bound at one SNR: the end-to-end union bound, or the pairwise
/// end-to-end bound when the config names a codeword pair.
pub fn bound_at(cfg: &RunConfig, snr_db: f64) -> Result<f64> {
    let cb = cfg.codebook()?;
    let spectrum = difference_spectrum(&cb)?;
    let topo = cfg.topology.at_snr_db(snr_db);
    let opts = cfg.bound.options();
    match cfg.simulation.pairwise {
        Some(p) => pairwise_end_to_end_bound(&topo, &cfg.fading, &spectrum, p.sent, p.counted, &opts),
        None => Ok(end_to_end_pep_bound(&topo, &cfg.fading, &spectrum, cfg.simulation.x0_index, &opts)?.raw),
    }
}

/// Analytic bound over the configured grid.
pub fn bound_curve(cfg: &RunConfig) -> Result<PepCurve> {
    cfg.validate()?;
    let values = cfg
        .snr_db
        .iter()
        .map(|&s| bound_at(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(PepCurve {
        snr_db: cfg.snr_db.clone(),
        values,
        kind: CurveKind::AnalyticBound,
        clamped: cfg.bound.clamp,
    })
}

/// Rows for a sweep, with the columns `cfg.mode` asks for.
pub fn compute_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows: Vec<SweepRow> = cfg.snr_db.iter().map(|&s| SweepRow::empty(s)).collect();
    if cfg.mode.analytic() {
        let curve = bound_curve(cfg)?;
        for (row, v) in rows.iter_mut().zip(&curve.values) {
            row.pep_bound_raw = Some(*v);
            row.pep_bound_clamped = Some(v.min(1.0));
        }
    }
    if cfg.mode.monte_carlo() {
        let estimates = estimate_error_rate(&cfg.sim_config()?)?;
        for (row, e) in rows.iter_mut().zip(&estimates) {
            row.pep_mc = Some(e.rate);
            row.ci_low = Some(e.ci_low);
            row.ci_high = Some(e.ci_high);
            row.trials = Some(e.trials);
        }
    }
    Ok(rows)
}

/// One data file listed in a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    /// File name relative to the manifest's directory.
    pub file: String,
    pub label: String,
    pub provenance: Vec<CurveKind>,
    pub config: RunConfig,
}

/// Selections that change what the numbers mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub mgf_form: MgfForm,
    pub composition: Composition,
    pub strategies: Vec<Strategy>,
    pub clamp: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub command: String,
    pub figure: Option<FigureId>,
    pub seed: u64,
    pub snr_definition: String,
    pub selections: Selections,
    /// Labels attached to simulated decoders.
    pub decoder_labels: BTreeMap<String, String>,
    pub curves: Vec<CurveRecord>,
}

impl RunManifest {
    fn new(command: &str, figure: Option<FigureId>, curves: Vec<CurveRecord>) -> Self {
        let first = &curves[0].config;
        let mut strategies: Vec<Strategy> = curves
            .iter()
            .filter(|c| c.config.mode.monte_carlo())
            .map(|c| c.config.simulation.strategy)
            .collect();
        strategies.dedup();
        let decoder_labels = strategies
            .iter()
            .map(|s| (s.as_str().to_string(), decoder_label(*s).to_string()))
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            command: command.to_string(),
            figure,
            seed: first.seed,
            snr_definition: SNR_DEFINITION.to_string(),
            selections: Selections {
                mgf_form: first.bound.mgf_form,
                composition: first.bound.composition,
                strategies,
                clamp: first.bound.clamp,
            },
            decoder_labels,
            curves,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("manifest JSON: {e}")))
    }
}

/// How each simulated strategy is presented in decoder-comparison plots.
pub fn decoder_label(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::GenieSdf => "maximum likelihood (relay forwards only correct decisions)",
        Strategy::DfAlwaysForward => "minimum distance (relay always forwards)",
        Strategy::SdfMlCombining => "near maximum likelihood (relay forwards on a confident metric gap)",
    }
}

/// Paths written by a sweep or figure run.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub manifest: PathBuf,
    pub data: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn provenance(mode: SweepMode) -> Vec<CurveKind> {
    let mut p = Vec::new();
    if mode.analytic() {
        p.push(CurveKind::AnalyticBound);
    }
    if mode.monte_carlo() {
        p.push(CurveKind::McEstimate);
    }
    p
}

fn write_curves(
    out_dir: &Path,
    command: &str,
    figure: Option<FigureId>,
    manifest_name: &str,
    curves: &[(String, String, RunConfig)],
) -> Result<Artifacts> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut records = Vec::with_capacity(curves.len());
    let mut data = Vec::with_capacity(curves.len());
    for (file, label, cfg) in curves {
        let rows = compute_sweep(cfg)?;
        let path = out_dir.join(file);
        write_file(&path, &render_csv(&rows))?;
        data.push(path);
        records.push(CurveRecord {
            file: file.clone(),
            label: label.clone(),
            provenance: provenance(cfg.mode),
            config: cfg.clone(),
        });
    }
    let manifest = RunManifest::new(command, figure, records);
    let manifest_path = out_dir.join(manifest_name);
    write_file(&manifest_path, &manifest.to_json())?;
    Ok(Artifacts {
        manifest: manifest_path,
        data,
    })
}

/// Writes `<stem>.csv` and `<stem>.manifest.json` under `out_dir`.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path, stem: &str) -> Result<Artifacts> {
    check_stem(stem)?;
    write_curves(
        out_dir,
        "sweep",
        None,
        &format!("{stem}.manifest.json"),
        &[(format!("{stem}.csv"), stem.to_string(), cfg.clone())],
    )
}

fn check_stem(stem: &str) -> Result<()> {
    let ok = !stem.is_empty()
        && stem
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !stem.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("output name `{stem}` must be a plain file stem")))
    }
}

/// Figure datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureId {
    /// Three simulated relay strategies against the analytic bound, Gaussian
    /// keyhole links with unit variances.
    DecoderComparison,
    /// Keyhole vs i.i.d. Nakagami bounds, m = 2, Ω = 2.
    KeyholeVsIid,
    /// As [`FigureId::KeyholeVsIid`] with Ω = 2000.
    KeyholeVsIidHighOmega,
    /// Keyhole Nakagami bounds for m = 1, 2, 3.
    MSweep,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [
        FigureId::DecoderComparison,
        FigureId::KeyholeVsIid,
        FigureId::KeyholeVsIidHighOmega,
        FigureId::MSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::DecoderComparison => "decoder-comparison",
            FigureId::KeyholeVsIid => "keyhole-vs-iid",
            FigureId::KeyholeVsIidHighOmega => "keyhole-vs-iid-high-omega",
            FigureId::MSweep => "m-sweep",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown figure `{s}`; expected one of {}",
                    Self::ALL.map(|f| f.as_str()).join(", ")
                ))
            })
    }
}

/// Per-curve configs of a figure: `(file, label, config)`. Antennas, grid,
/// seed, trials and bound options come from `base`; fading and curve
/// selection are fixed by the figure.
pub fn figure_configs(figure: FigureId, base: &RunConfig) -> Vec<(String, String, RunConfig)> {
    let name = figure.as_str();
    let with = |fading: LinkFadingSpec, mode: SweepMode| {
        let mut cfg = base.clone();
        cfg.fading = fading;
        cfg.mode = mode;
        cfg.simulation.pairwise = None;
        cfg
    };
    match figure {
        FigureId::DecoderComparison => Strategy::ALL
            .into_iter()
            .map(|s| {
                let mut cfg = with(LinkFadingSpec::uniform(LinkFading::GAUSSIAN_KEYHOLE), SweepMode::Both);
                cfg.simulation.strategy = s;
                (format!("{name}-{}.csv", s.as_str()), s.as_str().to_string(), cfg)
            })
            .collect(),
        FigureId::KeyholeVsIid | FigureId::KeyholeVsIidHighOmega => {
            let omega = if figure == FigureId::KeyholeVsIid { 2.0 } else { 2000.0 };
            [
                ("keyhole", LinkFading::nakagami_keyhole(2.0, omega)),
                ("iid", LinkFading::iid_nakagami(2.0, omega)),
            ]
            .into_iter()
            .map(|(label, link)| {
                (
                    format!("{name}-{label}.csv"),
                    label.to_string(),
                    with(LinkFadingSpec::uniform(link), SweepMode::Analytic),
                )
            })
            .collect()
        }
        FigureId::MSweep => [1.0, 2.0, 3.0]
            .into_iter()
            .map(|m| {
                let label = format!("m{m}");
                (
                    format!("{name}-{label}.csv"),
                    label,
                    with(
                        LinkFadingSpec::uniform(LinkFading::nakagami_keyhole(m, 1.0)),
                        SweepMode::Analytic,
                    ),
                )
            })
            .collect(),
    }
}

/// Writes every curve of `figure` plus `<figure>.manifest.json`.
pub fn emit_figure_dataset(figure: FigureId, base: &RunConfig, out_dir: &Path) -> Result<Artifacts> {
    let curves = figure_configs(figure, base);
    write_curves(
        out_dir,
        "figure",
        Some(figure),
        &format!("{}.manifest.json", figure.as_str()),
        &curves,
    )
}
