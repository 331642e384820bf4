use proptest::prelude::*;

use keyhole_pep::codebook::{hermitian_eigenvalues, lambda_min, ComplexMatrix};
use keyhole_pep::config::RunConfig;
use keyhole_pep::pepbound::{craig_transform, pairwise_pep_hop, BoundOptions, Hop, LinkFading, LinkFadingSpec, LinkTopology};
use keyhole_pep::report::{parse_csv, render_csv, RunManifest, SweepRow};
use keyhole_pep::simkit::wilson_interval;
use keyhole_pep::specfun::hyp2f0_neg;
use keyhole_pep::Complex64;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), rows * cols).prop_map(move |v| {
        ComplexMatrix::new(rows, cols, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
    })
}

fn opt_float() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(prop_oneof![-1e6f64..1e6, 1e-300f64..1e-200, Just(0.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyp2f0_in_unit_interval_and_decreasing(a in 0.5f64..8.0, b in 0.5f64..8.0, s in 1e-3f64..1e3) {
        let v = hyp2f0_neg(a, b, s).unwrap();
        let v2 = hyp2f0_neg(a, b, 2.0 * s).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(v2 < v);
    }

    #[test]
    fn hyp2f0_symmetric(a in 0.5f64..6.0, b in 0.5f64..6.0, s in 1e-2f64..1e2) {
        let x = hyp2f0_neg(a, b, s).unwrap();
        let y = hyp2f0_neg(b, a, s).unwrap();
        prop_assert!((x - y).abs() <= 1e-9 * x);
    }

    #[test]
    fn lambda_min_is_nonnegative_and_below_trace(a in matrix(2, 3), b in matrix(2, 3)) {
        prop_assume!(a != b);
        let lam = lambda_min(&a, &b).unwrap();
        let d = a.sub(&b).unwrap();
        let trace = d.frobenius_norm_sqr();
        prop_assert!(lam >= 0.0);
        prop_assert!(lam <= trace / 2.0 + 1e-9);
    }

    #[test]
    fn eigenvalues_sum_to_trace(m in matrix(3, 3)) {
        let g = m.matmul(&m.adjoint()).unwrap();
        let ev = hermitian_eigenvalues(&g).unwrap();
        let trace: f64 = (0..3).map(|i| g[(i, i)].re).sum();
        prop_assert!((ev.iter().sum::<f64>() - trace).abs() <= 1e-10 * trace.max(1.0));
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn craig_of_mgf_bounded_by_half(c in 0.0f64..50.0, k in 0.1f64..4.0) {
        let v = craig_transform(|x| Ok((1.0 + x).powf(-k)), c, 64).unwrap();
        prop_assert!(v > 0.0 && v <= 0.5 + 1e-15);
    }

    #[test]
    fn hop_bound_decreasing_in_snr(snr in -5.0f64..25.0, m in 0.5f64..4.0, omega in 0.1f64..10.0) {
        let fading = LinkFadingSpec::uniform(LinkFading::nakagami_keyhole(m, omega));
        let opts = BoundOptions::default();
        let lo = pairwise_pep_hop(&LinkTopology::at_snr_db(2, 2, 2, 1.0, 1.0, snr), Hop::SourceDestination, &fading, 4.0, &opts).unwrap();
        let hi = pairwise_pep_hop(&LinkTopology::at_snr_db(2, 2, 2, 1.0, 1.0, snr + 3.0), Hop::SourceDestination, &fading, 4.0, &opts).unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn wilson_brackets_rate(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn csv_round_trips_at_nine_digits(rows in prop::collection::vec(
        (-50.0f64..50.0, opt_float(), opt_float(), opt_float(), opt_float(), opt_float(), prop::option::of(1u64..u64::MAX)),
        0..20,
    )) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(snr_db, a, b, c, d, e, trials)| SweepRow {
                snr_db,
                pep_bound_raw: a,
                pep_bound_clamped: b,
                pep_mc: c,
                ci_low: d,
                ci_high: e,
                trials,
            })
            .collect();
        let text = render_csv(&rows);
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        // a second pass is exact: values are already at 9 digits
        prop_assert_eq!(render_csv(&back), text);
        for (x, y) in rows.iter().zip(&back) {
            prop_assert!((x.snr_db - y.snr_db).abs() <= 1e-8 * x.snr_db.abs());
            prop_assert_eq!(x.trials, y.trials);
            prop_assert_eq!(x.pep_mc.is_some(), y.pep_mc.is_some());
        }
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), trials in 1u64..1_000_000, m in 0.5f64..10.0, omega in 0.01f64..1e4) {
        let text = format!(
            "seed = {seed}\n[fading]\nkind = \"nakagami-keyhole\"\nm = {m:?}\nomega = {omega:?}\n[simulation]\ntrials = {trials}\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg.clone());
        let json = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn arbitrary_text_never_panics_parsers(text in ".{0,200}") {
        let _ = RunConfig::from_toml_str(&text);
        let _ = RunManifest::from_json(&text);
        let _ = parse_csv(&text);
    }
}
