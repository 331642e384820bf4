//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are printed on success too; exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::function::erf::erfc;

use keyhole_pep::codebook::{build_alamouti_codebook, difference_spectrum, lambda_min, ComplexMatrix, Constellation};
use keyhole_pep::config::{RunConfig, SweepMode};
use keyhole_pep::fading::{sample_channel, KeyholeSpec, SeededRng};
use keyhole_pep::pepbound::{craig_transform, pairwise_end_to_end_bound, BoundOptions, LinkFading, LinkFadingSpec};
use keyhole_pep::report::{bound_curve, compute_sweep, figure_configs, render_csv, run_sweep, FigureId};
use keyhole_pep::simkit::{estimate_error_rate, CodewordPair, SimConfig, Strategy};
use keyhole_pep::specfun::{mgf_gaussian_keyhole, mgf_nakagami_keyhole, tricomi_u};
use keyhole_pep::Complex64;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `E₁(x)` by its convergent power series.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn c1_mgf_correctness() -> Check {
    let mut worst = 0.0f64;
    for nt in 1..=4 {
        for nr in 1..=4 {
            let v = mgf_gaussian_keyhole(nt, nr, 0.0).map_err(err)?;
            worst = worst.max((v - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("M(0) deviates by {worst:e}"))?;
    let oracle = std::f64::consts::E * exp_integral_e1(1.0);
    let v = mgf_gaussian_keyhole(1, 1, 1.0).map_err(err)?;
    let diff = (v - oracle).abs();
    ensure(diff <= 1e-6, || format!("M(1) = {v}, e*E1(1) = {oracle}"))?;
    Ok(format!("max |M(0)-1| = {worst:.1e}; M_11(1) = {v:.10} vs e*E1(1) = {oracle:.10}"))
}

fn c2_mgf_vs_sampling() -> Check {
    const DRAWS: usize = 1_000_000;
    let shapes = [(1u32, 1u32), (2, 2), (2, 3)];
    let svals = [0.1, 1.0, 10.0];
    let mut worst_z = 0.0f64;
    let mut stream = 0;
    for &(nt, nr) in &shapes {
        for m in [None, Some(1.0), Some(2.0)] {
            let spec = match m {
                None => KeyholeSpec::gaussian(nt, nr),
                Some(m) => LinkFading::nakagami_keyhole(m, 1.0).channel_spec(nt, nr),
            };
            stream += 1;
            let mut rng = SeededRng::new(0xACCE_0002, stream);
            let norms: Vec<f64> = (0..DRAWS)
                .map(|_| sample_channel(&spec, &mut rng).unwrap().h.frobenius_norm_sqr())
                .collect();
            for &s in &svals {
                let n = DRAWS as f64;
                let (sum, sum_sq) = norms
                    .iter()
                    .map(|x| (-s * x).exp())
                    .fold((0.0, 0.0), |(a, b), e| (a + e, b + e * e));
                let mean = sum / n;
                let se = ((sum_sq / n - mean * mean) / (n - 1.0)).sqrt();
                let exact = match m {
                    None => mgf_gaussian_keyhole(nt, nr, s),
                    Some(m) => mgf_nakagami_keyhole(m, m, nt, nr, s),
                }
                .map_err(err)?;
                let z = (mean - exact).abs() / se;
                ensure(z <= 4.0, || {
                    format!("({nt},{nr}) m={m:?} s={s}: empirical {mean:.6} vs {exact:.6}, {z:.2} SE")
                })?;
                worst_z = worst_z.max(z);
            }
        }
    }
    Ok(format!("27 cases at 1e6 draws, worst deviation {worst_z:.2} SE (limit 4)"))
}

fn c3_tricomi_identity() -> Check {
    let mut worst = 0.0f64;
    for a in [1u32, 2, 3] {
        for b in [1u32, 2, 4] {
            for s in [0.1, 1.0, 10.0] {
                let z: f64 = 1.0 / s;
                let (af, bf) = (a as f64, b as f64);
                let via_u = z.powf(af) * tricomi_u(af, af - bf + 1.0, z).map_err(err)?;
                let direct = mgf_gaussian_keyhole(a, b, s).map_err(err)?;
                worst = worst.max((via_u - direct).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max difference {worst:e}"))?;
    Ok(format!("3x3x3 grid, max |diff| = {worst:.1e} (limit 1e-8)"))
}

fn c4_craig_oracle() -> Check {
    let mut worst = 0.0f64;
    for c in [0.5, 1.0, 4.0] {
        let v = craig_transform(|x| Ok((-x).exp()), c, 64).map_err(err)?;
        let q = q_function((2.0 * c).sqrt());
        worst = worst.max((v - q).abs());
    }
    ensure(worst <= 1e-7, || format!("max difference {worst:e}"))?;
    Ok(format!("c in {{0.5, 1, 4}}, max |diff| vs Q(sqrt(2c)) = {worst:.1e} (limit 1e-7)"))
}

fn bpsk_sim_config() -> SimConfig {
    let cb = build_alamouti_codebook(&Constellation::Bpsk.points()).unwrap();
    let cfg = RunConfig::default();
    SimConfig::new(
        cfg.topology_template(),
        LinkFadingSpec::uniform(LinkFading::GAUSSIAN_KEYHOLE),
        cb,
    )
}

fn c5_bound_dominance() -> Check {
    let mut sim = bpsk_sim_config();
    let pair = CodewordPair { sent: 0, counted: 1 };
    sim.pairwise_pair = Some(pair);
    sim.strategy = Strategy::GenieSdf;
    sim.snr_db = vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0];
    sim.trials = 1_000_000;
    sim.seed = 0xACCE_0005;
    let estimates = estimate_error_rate(&sim).map_err(err)?;
    let spectrum = difference_spectrum(&sim.codebook).map_err(err)?;
    let opts = BoundOptions::default();
    let mut tightest = f64::INFINITY;
    for e in &estimates {
        let topo = sim.topo.with_snr_db(e.snr_db);
        let bound = pairwise_end_to_end_bound(&topo, &sim.fading, &spectrum, pair.sent, pair.counted, &opts)
            .map_err(err)?;
        ensure(e.ci_low <= bound, || {
            format!("{} dB: ci_low {:.4e} > bound {bound:.4e}", e.snr_db, e.ci_low)
        })?;
        if e.ci_low > 0.0 {
            tightest = tightest.min(bound / e.ci_low);
        }
    }
    Ok(format!(
        "0-20 dB step 4 at 1e6 trials, smallest bound/ci_low ratio {tightest:.3}"
    ))
}

fn strictly_above_from_10db(figure: FigureId) -> Result<(f64, usize), String> {
    let base = RunConfig::default();
    let curves = figure_configs(figure, &base)
        .into_iter()
        .map(|(_, _, cfg)| bound_curve(&cfg).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    let mut min_ratio = f64::INFINITY;
    let mut points = 0;
    for (k, &snr) in curves[0].snr_db.iter().enumerate() {
        if snr < 10.0 {
            continue;
        }
        points += 1;
        for w in curves.windows(2) {
            let (hi, lo) = (w[0].values[k], w[1].values[k]);
            ensure(hi > lo, || format!("{} at {snr} dB: {hi:e} <= {lo:e}", figure.as_str()))?;
            min_ratio = min_ratio.min(hi / lo);
        }
    }
    Ok((min_ratio, points))
}

fn c6_keyhole_above_iid() -> Check {
    let (r2, n) = strictly_above_from_10db(FigureId::KeyholeVsIid)?;
    let (r2000, _) = strictly_above_from_10db(FigureId::KeyholeVsIidHighOmega)?;
    Ok(format!(
        "{n} points >= 10 dB; min keyhole/iid ratio {r2:.3e} (omega 2), {r2000:.3e} (omega 2000)"
    ))
}

fn c7_m_ordering() -> Check {
    let (r, n) = strictly_above_from_10db(FigureId::MSweep)?;
    Ok(format!("{n} points >= 10 dB; min ratio between successive m {r:.3e}"))
}

fn c8_min_distance_worst() -> Check {
    let mut sim = bpsk_sim_config();
    sim.snr_db = vec![12.0, 16.0, 20.0];
    sim.trials = 1_000_000;
    sim.seed = 0xACCE_0008;
    sim.strategy = Strategy::GenieSdf;
    let genie = estimate_error_rate(&sim).map_err(err)?;
    sim.strategy = Strategy::DfAlwaysForward;
    let df = estimate_error_rate(&sim).map_err(err)?;
    let mut weakest = f64::INFINITY;
    for (g, d) in genie.iter().zip(&df) {
        let n = g.trials as f64;
        let pooled = (g.errors + d.errors) as f64 / (2.0 * n);
        let se = (pooled * (1.0 - pooled) * 2.0 / n).sqrt();
        let z = if se > 0.0 { (d.rate - g.rate) / se } else { 0.0 };
        ensure(z > 1.645, || {
            format!("{} dB: df {:.3e} vs genie {:.3e}, z = {z:.2}", g.snr_db, d.rate, g.rate)
        })?;
        weakest = weakest.min(z);
    }
    Ok(format!("12/16/20 dB at 1e6 trials, smallest one-sided z = {weakest:.1} (limit 1.645)"))
}

fn random_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let entries = (0..rows * cols)
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    ComplexMatrix::new(rows, cols, entries).unwrap()
}

/// Smallest eigenvalue of `(a − b)(a − b)ᴴ` via nalgebra's Hermitian solver.
fn nalgebra_lambda_min(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (r, c) = a.shape();
    let d = DMatrix::from_fn(r, c, |i, j| a[(i, j)] - b[(i, j)]);
    let g = &d * d.adjoint();
    g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn c9_lambda_min_oracle() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACCE_0009);
    let qpsk = build_alamouti_codebook(&Constellation::Qpsk.points()).map_err(err)?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let (a, b) = match k % 3 {
            // codeword pairs from the QPSK Alamouti book
            0 => {
                let i = rng.random_range(0..qpsk.len());
                let mut j = rng.random_range(0..qpsk.len());
                while j == i {
                    j = rng.random_range(0..qpsk.len());
                }
                (qpsk.codewords()[i].clone(), qpsk.codewords()[j].clone())
            }
            1 => (random_matrix(&mut rng, 2, 2), random_matrix(&mut rng, 2, 2)),
            _ => (random_matrix(&mut rng, 3, 4), random_matrix(&mut rng, 3, 4)),
        };
        let ours = lambda_min(&a, &b).map_err(err)?;
        let oracle = nalgebra_lambda_min(&a, &b).max(0.0);
        let diff = (ours - oracle).abs();
        ensure(diff <= 1e-10, || format!("pair {k}: {ours} vs {oracle}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("100 pairs (QPSK Alamouti, random 2x2, random 3x4), max |diff| = {worst:.1e}"))
}

fn c10_determinism() -> Check {
    let cfg = RunConfig {
        mode: SweepMode::Both,
        snr_db: vec![0.0, 6.0, 12.0, 18.0],
        seed: 0xACCE_0010,
        simulation: keyhole_pep::config::SimulationSettings {
            trials: 50_000,
            ..RunConfig::default().simulation
        },
        ..RunConfig::default()
    };
    let a = render_csv(&compute_sweep(&cfg).map_err(err)?);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(err)?;
    let b = single.install(|| compute_sweep(&cfg)).map(|r| render_csv(&r)).map_err(err)?;
    let wide = rayon::ThreadPoolBuilder::new().num_threads(5).build().map_err(err)?;
    let c = wide.install(|| compute_sweep(&cfg)).map(|r| render_csv(&r)).map_err(err)?;
    ensure(a == b && b == c, || "CSV text differs between runs".to_string())?;
    let dir = tempfile::tempdir().map_err(err)?;
    let f1 = run_sweep(&cfg, dir.path(), "first").map_err(err)?;
    let f2 = run_sweep(&cfg, dir.path(), "second").map_err(err)?;
    let (b1, b2) = (
        std::fs::read(&f1.data[0]).map_err(err)?,
        std::fs::read(&f2.data[0]).map_err(err)?,
    );
    ensure(b1 == b2 && b1 == a.as_bytes(), || "written CSV files differ".to_string())?;
    Ok(format!("{} bytes identical across 1, 5 and default worker threads and two file runs", b1.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("MGF correctness", c1_mgf_correctness),
        ("MGF vs sampling", c2_mgf_vs_sampling),
        ("Tricomi identity cross-check", c3_tricomi_identity),
        ("Craig oracle", c4_craig_oracle),
        ("bound dominance (genie-sdf pairwise MC)", c5_bound_dominance),
        ("keyhole bound above iid bound", c6_keyhole_above_iid),
        ("bound decreasing in m", c7_m_ordering),
        ("always-forward worse than genie-sdf", c8_min_distance_worst),
        ("lambda_min oracle equivalence", c9_lambda_min_oracle),
        ("determinism", c10_determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".to_string()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
