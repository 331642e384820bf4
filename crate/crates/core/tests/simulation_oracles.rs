use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};

use keyhole_pep::codebook::{build_alamouti_codebook, difference_spectrum, ComplexMatrix, Constellation};
use keyhole_pep::fading::{sample_gamma, sample_nakagami_amplitude, ChannelRealization, SeededRng};
use keyhole_pep::pepbound::{pairwise_end_to_end_bound, BoundOptions, LinkFading, LinkFadingSpec, LinkTopology};
use keyhole_pep::simkit::{estimate_error_rate, transmit, CodewordPair, SimConfig, Strategy};

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn gamma_sampler_matches_reference_distribution() {
    const N: usize = 100_000;
    // critical value at α = 0.001
    let crit = 1.95 * (2.0 / N as f64).sqrt();
    for (k, &shape) in [0.5, 0.8, 1.0, 2.0, 6.5].iter().enumerate() {
        let mut ours = SeededRng::new(91, k as u64);
        let a: Vec<f64> = (0..N).map(|_| sample_gamma(shape, 1.5, &mut ours).unwrap()).collect();
        let mut reference = ChaCha20Rng::seed_from_u64(1000 + k as u64);
        let dist = Gamma::new(shape, 1.5).unwrap();
        let b: Vec<f64> = (0..N).map(|_| dist.sample(&mut reference)).collect();
        let d = ks_statistic(a, b);
        assert!(d < crit, "shape {shape}: KS {d} >= {crit}");
    }
}

#[test]
fn nakagami_amplitude_squared_is_gamma() {
    const N: usize = 100_000;
    let crit = 1.95 * (2.0 / N as f64).sqrt();
    let (m, omega) = (2.0, 3.0);
    let mut ours = SeededRng::new(92, 0);
    let a: Vec<f64> = (0..N)
        .map(|_| sample_nakagami_amplitude(m, omega, &mut ours).unwrap().powi(2))
        .collect();
    let mut reference = ChaCha20Rng::seed_from_u64(93);
    let dist = Gamma::new(m, omega / m).unwrap();
    let b: Vec<f64> = (0..N).map(|_| dist.sample(&mut reference)).collect();
    let d = ks_statistic(a, b);
    assert!(d < crit, "KS {d}");
}

#[test]
fn transmit_noise_variance() {
    const N: usize = 100_000;
    let eta0 = 0.37;
    let mut rng = SeededRng::new(94, 0);
    let h = ChannelRealization::zero(1, 2);
    let x = ComplexMatrix::identity(2);
    let samples: Vec<f64> = (0..N)
        .map(|_| transmit(&x, &h, 1.0, 2, eta0, &mut rng).unwrap().entries()[0].norm_sqr())
        .collect();
    let mean = samples.iter().sum::<f64>() / N as f64;
    // |w|² is exponential with mean η₀, so its standard deviation is η₀
    let sigma = eta0 / (N as f64).sqrt();
    assert!((mean - eta0).abs() < 3.0 * sigma, "{mean} vs {eta0}");
}

fn bpsk_config() -> SimConfig {
    let cb = build_alamouti_codebook(&Constellation::Bpsk.points()).unwrap();
    SimConfig::new(
        LinkTopology::at_snr_db(2, 2, 2, 1.0, 1.0, 0.0),
        LinkFadingSpec::uniform(LinkFading::GAUSSIAN_KEYHOLE),
        cb,
    )
}

/// Equal-energy codewords make every decision equally likely once noise
/// dominates. The correct-decision excess shrinks only like √SNR (≈ 0.008 at
/// −40 dB), so the limit is checked at −80 dB.
#[test]
fn noise_dominated_decoding_is_uniform_guessing() {
    let mut cfg = bpsk_config();
    cfg.snr_db = vec![-80.0];
    cfg.trials = 100_000;
    cfg.seed = 95;
    let e = estimate_error_rate(&cfg).unwrap()[0];
    let sigma = (0.75 * 0.25 / cfg.trials as f64).sqrt();
    assert!((e.rate - 0.75).abs() < 4.0 * sigma, "{}", e.rate);
}

#[test]
fn pairwise_genie_rate_below_pairwise_bound_at_10db() {
    let mut cfg = bpsk_config();
    cfg.snr_db = vec![10.0];
    cfg.trials = 200_000;
    cfg.seed = 96;
    cfg.pairwise_pair = Some(CodewordPair { sent: 0, counted: 1 });
    let e = estimate_error_rate(&cfg).unwrap()[0];
    let spectrum = difference_spectrum(&cfg.codebook).unwrap();
    let bound = pairwise_end_to_end_bound(
        &cfg.topo.with_snr_db(10.0),
        &cfg.fading,
        &spectrum,
        0,
        1,
        &BoundOptions::default(),
    )
    .unwrap();
    assert!(e.ci_low <= bound, "{} > {bound}", e.ci_low);
}

#[test]
fn strategies_non_increasing_in_snr() {
    let mut cfg = bpsk_config();
    cfg.snr_db = (0..=6).map(|k| 4.0 * k as f64).collect();
    cfg.trials = 40_000;
    cfg.seed = 97;
    for s in Strategy::ALL {
        cfg.strategy = s;
        let est = estimate_error_rate(&cfg).unwrap();
        for w in est.windows(2) {
            assert!(w[1].ci_low <= w[0].ci_high, "{s:?}: {:?}", w);
        }
    }
}

#[test]
fn keyhole_errs_more_than_iid_and_higher_m_errs_less() {
    let mut cfg = bpsk_config();
    cfg.snr_db = vec![10.0];
    cfg.trials = 1_000_000;
    cfg.seed = 98;
    let rates = |cfg: &SimConfig| -> Vec<(f64, f64)> {
        estimate_error_rate(cfg)
            .unwrap()
            .iter()
            .map(|e| (e.ci_low, e.ci_high))
            .collect()
    };
    cfg.fading = LinkFadingSpec::uniform(LinkFading::nakagami_keyhole(1.0, 1.0));
    let keyhole = rates(&cfg);
    cfg.fading = LinkFadingSpec::uniform(LinkFading::iid_nakagami(1.0, 1.0));
    let iid = rates(&cfg);
    cfg.fading = LinkFadingSpec::uniform(LinkFading::nakagami_keyhole(3.0, 1.0));
    let keyhole_m3 = rates(&cfg);
    assert!(keyhole[0].0 > iid[0].1, "keyhole {:?} iid {:?}", keyhole[0], iid[0]);
    assert!(keyhole[0].0 > keyhole_m3[0].1, "m=1 {:?} m=3 {:?}", keyhole[0], keyhole_m3[0]);
}

#[test]
fn worker_count_does_not_change_estimates() {
    let mut cfg = bpsk_config();
    cfg.snr_db = vec![6.0];
    cfg.trials = 50_000;
    cfg.seed = 99;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| estimate_error_rate(&cfg).unwrap());
    let b = four.install(|| estimate_error_rate(&cfg).unwrap());
    assert_eq!(a, b);
}
