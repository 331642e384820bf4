use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use keyhole_pep::config::{snr_grid, RunConfig, SweepMode};
use keyhole_pep::pepbound::{Composition, MgfForm};
use keyhole_pep::report::{compute_sweep, emit_figure_dataset, render_csv, run_sweep, FigureId};
use keyhole_pep::simkit::Strategy;
use keyhole_pep::{Error, Result};

/// Pairwise error probability bounds and Monte Carlo estimates for
/// selective decode-and-forward relaying over keyhole channels.
#[derive(Debug, Parser)]
#[command(name = "keyhole-pep", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// TOML configuration file; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for every Monte Carlo stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV and manifest files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Shape of the Nakagami keyhole MGF argument.
    #[arg(long, global = true, value_enum)]
    mgf_form: Option<MgfFormArg>,

    /// How relay-failure and two-phase terms combine into the end-to-end bound.
    #[arg(long, global = true, value_enum)]
    composition: Option<CompositionArg>,

    /// Record that bounds above 1 should be shown clamped to 1.
    #[arg(long, global = true)]
    clamp: bool,
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    n_s: Option<u32>,
    #[arg(long)]
    n_r: Option<u32>,
    #[arg(long)]
    n_d: Option<u32>,
    /// Monte Carlo trials per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Explicit SNR points in dB (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["snr_start", "snr_stop", "snr_step"])]
    snr_db: Option<Vec<f64>>,
    /// First grid point in dB.
    #[arg(long)]
    snr_start: Option<f64>,
    /// Last grid point in dB, inclusive.
    #[arg(long)]
    snr_stop: Option<f64>,
    /// Grid spacing in dB.
    #[arg(long)]
    snr_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print analytic bounds over the SNR grid as CSV.
    Bound {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print Monte Carlo error-rate estimates over the SNR grid as CSV.
    Simulate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a sweep CSV and its manifest to the output directory.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// File stem for the CSV and manifest.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Write the curves of one figure dataset and its manifest.
    Figure {
        #[arg(value_enum)]
        figure: FigureArg,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MgfFormArg {
    MomentScaled,
    Unscaled,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CompositionArg {
    Selective,
    HighSnrUnion,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    GenieSdf,
    DfAlwaysForward,
    SdfMlCombining,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Analytic,
    MonteCarlo,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FigureArg {
    DecoderComparison,
    KeyholeVsIid,
    KeyholeVsIidHighOmega,
    MSweep,
}

impl From<FigureArg> for FigureId {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::DecoderComparison => FigureId::DecoderComparison,
            FigureArg::KeyholeVsIid => FigureId::KeyholeVsIid,
            FigureArg::KeyholeVsIidHighOmega => FigureId::KeyholeVsIidHighOmega,
            FigureArg::MSweep => FigureId::MSweep,
        }
    }
}

fn resolve(global: &GlobalOpts, o: &Overrides, mode: Option<SweepMode>) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(f) = global.mgf_form {
        cfg.bound.mgf_form = match f {
            MgfFormArg::MomentScaled => MgfForm::MomentScaled,
            MgfFormArg::Unscaled => MgfForm::Unscaled,
        };
    }
    if let Some(c) = global.composition {
        cfg.bound.composition = match c {
            CompositionArg::Selective => Composition::Selective,
            CompositionArg::HighSnrUnion => Composition::HighSnrUnion,
        };
    }
    if global.clamp {
        cfg.bound.clamp = true;
    }
    if let Some(n) = o.n_s {
        cfg.topology.n_s = n;
    }
    if let Some(n) = o.n_r {
        cfg.topology.n_r = n;
    }
    if let Some(n) = o.n_d {
        cfg.topology.n_d = n;
    }
    if let Some(t) = o.trials {
        cfg.simulation.trials = t;
    }
    if let Some(s) = o.strategy {
        cfg.simulation.strategy = match s {
            StrategyArg::GenieSdf => Strategy::GenieSdf,
            StrategyArg::DfAlwaysForward => Strategy::DfAlwaysForward,
            StrategyArg::SdfMlCombining => Strategy::SdfMlCombining,
        };
    }
    if let Some(grid) = &o.snr_db {
        cfg.snr_db = grid.clone();
    } else if o.snr_start.is_some() || o.snr_stop.is_some() || o.snr_step.is_some() {
        let cur = &cfg.snr_db;
        let step = match cur.len() {
            0 | 1 => 2.0,
            _ => cur[1] - cur[0],
        };
        cfg.snr_db = snr_grid(
            o.snr_start.unwrap_or(cur.first().copied().unwrap_or(0.0)),
            o.snr_stop.unwrap_or(cur.last().copied().unwrap_or(24.0)),
            o.snr_step.unwrap_or(step),
        )?;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io {
            path: "<stdout>".to_string(),
            source,
        })
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Bound { overrides } => {
            let cfg = resolve(g, overrides, Some(SweepMode::Analytic))?;
            print_stdout(&render_csv(&compute_sweep(&cfg)?))
        }
        Command::Simulate { overrides } => {
            let cfg = resolve(g, overrides, Some(SweepMode::MonteCarlo))?;
            print_stdout(&render_csv(&compute_sweep(&cfg)?))
        }
        Command::Sweep {
            overrides,
            mode,
            name,
        } => {
            let mode = mode.map(|m| match m {
                ModeArg::Analytic => SweepMode::Analytic,
                ModeArg::MonteCarlo => SweepMode::MonteCarlo,
                ModeArg::Both => SweepMode::Both,
            });
            let cfg = resolve(g, overrides, mode)?;
            let art = run_sweep(&cfg, &g.out_dir, name)?;
            eprintln!("wrote {} and {}", art.data[0].display(), art.manifest.display());
            Ok(())
        }
        Command::Figure { figure, overrides } => {
            // figure curves pick their own mode; validate the base as analytic
            let cfg = resolve(g, overrides, Some(SweepMode::Analytic))?;
            let art = emit_figure_dataset((*figure).into(), &cfg, &g.out_dir)?;
            for p in &art.data {
                eprintln!("wrote {}", p.display());
            }
            eprintln!("wrote {}", art.manifest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
