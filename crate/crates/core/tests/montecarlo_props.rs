use fblfas_core::channel::{build_correlation, eigen_factor, sample_channels, SystemConfig};
use fblfas_core::fas_stats::GainDistribution;
use fblfas_core::metrics::{mrc_gain_samples, outage_probability, statistical_bler};
use fblfas_core::montecarlo::{
    empirical_gain_cdf, empirical_outage, empirical_statistical_bler, max_gain_samples, McEstimate,
};
use fblfas_core::quadrature::gauss_laguerre;

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(job)
}

fn fig3_upper(ports: usize, snr_db: f64) -> SystemConfig {
    SystemConfig {
        ports,
        antenna_length: 0.5,
        users: 20,
        blocklength: 5,
        outage_threshold: 1e-3,
        ..SystemConfig::default()
    }
    .with_snr_db(snr_db)
}

#[test]
fn standard_error_halves_when_samples_quadruple() {
    let grid = [1.0, 3.0, 6.0];
    let small = empirical_gain_cdf(10, 0.5, 2.0, &grid, 25_000, 1).unwrap();
    let large = empirical_gain_cdf(10, 0.5, 2.0, &grid, 100_000, 1).unwrap();
    for (a, b) in small.iter().zip(&large) {
        let ratio = a.standard_error / b.standard_error;
        assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
    }
    let cfg = SystemConfig {
        users: 10,
        ..fig3_upper(10, 20.0)
    };
    let a = empirical_statistical_bler(&cfg, 25_000, 2).unwrap();
    let b = empirical_statistical_bler(&cfg, 100_000, 2).unwrap();
    let ratio = a.standard_error / b.standard_error;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn empirical_cdf_is_non_decreasing() {
    let grid: Vec<f64> = (0..60).map(|k| 0.25 * k as f64).collect();
    let cdf = empirical_gain_cdf(20, 1.0, 2.0, &grid, 20_000, 9).unwrap();
    assert_eq!(cdf[0].value, 0.0);
    assert!(cdf.windows(2).all(|w| w[0].value <= w[1].value));
    assert!(empirical_gain_cdf(20, 1.0, 2.0, &[2.0, 1.0], 20_000, 9).is_err());
}

#[test]
fn single_port_bound_matches_oracle() {
    // 30-digit value of int (1/s2) exp(-t/s2) (1 + 0.5 cw t / noise)^-M dt.
    let cfg = SystemConfig {
        ports: 1,
        users: 1,
        blocklength: 5,
        noise_variance: 0.126_191_468_896_038_65,
        ..SystemConfig::default()
    };
    let want = 0.131_771_472_338_443_7;
    let est = empirical_statistical_bler(&cfg, 200_000, 31).unwrap();
    assert!((est.value - want).abs() <= 3.0 * est.standard_error, "{est:?}");
}

#[test]
fn outage_limits() {
    let tiny = SystemConfig {
        outage_threshold: 1e-300,
        ..fig3_upper(10, 0.0)
    };
    assert_eq!(empirical_outage(&tiny, 5_000, 1).unwrap().value, 0.0);
    let saturated = SystemConfig {
        outage_threshold: 0.5,
        ..fig3_upper(10, 0.0)
    };
    let est = empirical_outage(&saturated, 5_000, 1).unwrap();
    assert_eq!(est.value, 1.0);
    assert_eq!(est.standard_error, 0.0);
}

#[test]
fn outage_agrees_with_block_model() {
    // The fixed-mu2 block model drifts from the exact law as N grows, so the
    // 0.02 allowance is only meaningful for small arrays.
    for (ports, snr) in [(5usize, -25.0), (5, -20.0)] {
        let cfg = fig3_upper(ports, snr);
        let (dist, _) =
            GainDistribution::for_array(ports, 0.5, 0.97, 2.0, gauss_laguerre(32).unwrap()).unwrap();
        let analytic = outage_probability(&cfg, &dist).unwrap();
        let est = empirical_outage(&cfg, 100_000, 44).unwrap();
        assert!(!est.rare);
        assert!(
            (est.value - analytic).abs() <= 3.0 * est.standard_error + 0.02,
            "N={ports}: {} vs {analytic}",
            est.value
        );
    }
}

#[test]
fn empirical_bound_orders_like_analytic() {
    let make = |ports| SystemConfig {
        ports,
        antenna_length: 1.0,
        users: 10,
        blocklength: 5,
        ..SystemConfig::default()
    };
    let small = empirical_statistical_bler(&make(5), 20_000, 3).unwrap();
    let large = empirical_statistical_bler(&make(50), 20_000, 3).unwrap();
    assert!(large.value < small.value);
    let (dist, _) = GainDistribution::for_array(50, 1.0, 0.97, 2.0, gauss_laguerre(32).unwrap()).unwrap();
    let analytic = statistical_bler(&make(50), &dist).unwrap().value;
    assert!((large.value - analytic).abs() <= 3.0 * large.standard_error + 0.02);
}

#[test]
fn seeded_results_ignore_thread_count() {
    let cfg = fig3_upper(30, -5.0);
    let grid = [0.5, 2.0, 8.0];
    let corr = build_correlation(12, 1.5).unwrap();
    let factor = eigen_factor(&corr).unwrap();
    // 3 chunks and a partial one, so the pool really splits the work.
    let samples = 3 * 4096 + 17;
    let run = || {
        (
            max_gain_samples(30, 0.5, 2.0, samples, 5).unwrap(),
            empirical_gain_cdf(30, 0.5, 2.0, &grid, samples, 5).unwrap(),
            empirical_outage(&cfg, samples, 5).unwrap(),
            empirical_statistical_bler(&cfg, samples, 5).unwrap(),
            sample_channels(&factor, 2.0, samples, 5).unwrap(),
            mrc_gain_samples(3, 2.0, samples, 5).unwrap(),
        )
    };
    let one = with_threads(1, run);
    let eight = with_threads(8, run);
    assert_eq!(one.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), eight.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(one.1, eight.1);
    assert_eq!(one.2, eight.2);
    assert_eq!(one.3, eight.3);
    assert_eq!(one.4, eight.4);
    assert_eq!(one.5, eight.5);
}

#[test]
fn estimates_carry_their_provenance() {
    let est = McEstimate::from_hits(3, 1_000, 42);
    assert!(est.rare);
    assert_eq!((est.samples, est.seed), (1_000, 42));
    assert!(!McEstimate::from_hits(10, 1_000, 42).rare);
}
