use fblfas_core::channel::{BlockModel, SystemConfig};
use fblfas_core::fas_stats::GainDistribution;
use fblfas_core::metrics::{
    conditional_bler, conditional_bler_raw, mrc_conditional_bler, mrc_conditional_bler_estimate,
    mrc_gain_samples, mrc_outage, outage_probability, outage_threshold, statistical_bler,
    statistical_bler_raw, OutageThreshold,
};
use fblfas_core::quadrature::gauss_laguerre;
use proptest::prelude::*;

fn config(ports: usize, antenna_length: f64, users: usize, snr_db: f64) -> SystemConfig {
    SystemConfig {
        ports,
        antenna_length,
        users,
        blocklength: 5,
        ..SystemConfig::default()
    }
    .with_snr_db(snr_db)
}

fn fitted(cfg: &SystemConfig) -> GainDistribution {
    GainDistribution::for_array(cfg.ports, cfg.antenna_length, 0.97, cfg.channel_variance, gauss_laguerre(32).unwrap())
        .unwrap()
        .0
}

fn single_port(variance: f64) -> GainDistribution {
    GainDistribution::new(BlockModel::new(vec![1], 1e-9).unwrap(), variance, gauss_laguerre(32).unwrap()).unwrap()
}

#[test]
fn single_user_closed_form() {
    for gain in [0.0, 0.3, 2.0, 40.0] {
        let got = conditional_bler(1, 5, gain, 0.2, 0.02).unwrap();
        let want = (1.0 + 0.5 * 0.2 * gain / 0.02_f64).powi(-5);
        assert!((got - want).abs() <= 1e-15 * want.max(1e-300), "gain {gain}");
    }
    assert_eq!(conditional_bler(1, 5, 0.0, 0.2, 0.02).unwrap(), 1.0);
}

#[test]
fn conditional_bound_monotone_on_grids() {
    let gains: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
    for users in 1..=30 {
        for pair in gains.windows(2) {
            let a = conditional_bler(users, 5, pair[0], 0.2, 0.01).unwrap();
            let b = conditional_bler(users, 5, pair[1], 0.2, 0.01).unwrap();
            assert!(b <= a, "U={users} gains {pair:?}");
        }
    }
    for &gain in &gains {
        for users in 1..30 {
            let a = conditional_bler(users, 5, gain, 0.2, 0.01).unwrap();
            let b = conditional_bler(users + 1, 5, gain, 0.2, 0.01).unwrap();
            assert!(b >= a, "gain {gain} U={users}");
        }
    }
    assert!(conditional_bler(10, 5, 10.0, 0.2, 0.01).unwrap() < conditional_bler(10, 5, 5.0, 0.2, 0.01).unwrap());
}

#[test]
fn single_port_statistical_bound_matches_oracle() {
    // (users, blocklength, sigma2, noise, 30-digit value)
    let cases = [
        (1usize, 5usize, 2.0, 0.02, 0.024_205_006_101_060_295),
        (1, 5, 2.0, 0.126_191_468_896_038_65, 0.131_771_472_338_443_7),
        (1, 3, 0.5, 0.1, 0.334_407_435_557_093_9),
        (10, 5, 2.0, 0.02, 0.225_781_566_051_142_97),
        (4, 3, 1.0, 0.05, 0.435_633_475_167_207_7),
    ];
    for (users, blocklength, sigma2, noise, want) in cases {
        let cfg = SystemConfig {
            ports: 1,
            users,
            blocklength,
            channel_variance: sigma2,
            noise_variance: noise,
            ..SystemConfig::default()
        };
        let got = statistical_bler(&cfg, &single_port(sigma2)).unwrap();
        assert!(got.converged);
        assert!((got.value - want).abs() <= 1e-7, "U={users}: {} vs {want}", got.value);
    }
}

#[test]
fn statistical_bound_is_sandwiched() {
    for (ports, length, users, snr) in [(5usize, 1.0, 10usize, 20.0), (50, 1.0, 10, 20.0), (10, 0.5, 3, 5.0), (50, 1.0, 10, 12.0)] {
        let cfg = config(ports, length, users, snr);
        let dist = fitted(&cfg);
        let value = statistical_bler(&cfg, &dist).unwrap().value;
        let cw = cfg.codeword_variance();
        let high_gain = dist.quantile(0.9999).unwrap();
        let floor = conditional_bler(users, 5, high_gain, cw, cfg.noise_variance).unwrap();
        let ceiling = conditional_bler(users, 5, 0.0, cw, cfg.noise_variance).unwrap();
        assert!(floor <= value && value <= ceiling, "N={ports}: {floor} <= {value} <= {ceiling}");
    }
}

#[test]
fn more_ports_lower_the_bound() {
    let small = config(5, 1.0, 10, 20.0);
    let large = config(50, 1.0, 10, 20.0);
    let a = statistical_bler(&small, &fitted(&small)).unwrap().value;
    let b = statistical_bler(&large, &fitted(&large)).unwrap().value;
    assert!(b < a, "N=50 {b} vs N=5 {a}");
}

#[test]
fn raw_average_dominates_clamped() {
    let cfg = config(5, 1.0, 10, 20.0);
    let dist = fitted(&cfg);
    let clamped = statistical_bler(&cfg, &dist).unwrap().value;
    let raw = statistical_bler_raw(&cfg, &dist).unwrap().value;
    assert!(raw >= clamped);
}

#[test]
fn outage_monotone_in_threshold_users_and_snr() {
    let base = config(50, 0.5, 20, 10.0);
    let dist = fitted(&base);
    let op = |cfg: &SystemConfig| outage_probability(cfg, &dist).unwrap();
    let mut last = 0.0;
    for k in 0..40 {
        let gamma = 1e-5 * 1.3f64.powi(k);
        let value = op(&SystemConfig { outage_threshold: gamma, ..base });
        assert!(value >= last, "gamma {gamma}");
        last = value;
    }
    let mut last = 0.0;
    for users in 1..=40 {
        let value = op(&SystemConfig { users, ..base });
        assert!(value >= last, "U={users}");
        last = value;
    }
    let mut last = 1.0;
    for k in 0..30 {
        let value = op(&base.with_snr_db(-40.0 + 2.0 * k as f64));
        assert!(value <= last, "snr step {k}");
        last = value;
    }
}

#[test]
fn independent_outage_closed_form() {
    for ports in [1usize, 5, 10, 40] {
        for snr in [-10.0, 0.0, 10.0] {
            let cfg = config(ports, 0.5, 20, snr);
            let dist = GainDistribution::new(BlockModel::new(vec![ports], 1e-9).unwrap(), 2.0, gauss_laguerre(32).unwrap())
                .unwrap();
            let OutageThreshold::Finite(t) = outage_threshold(&cfg).unwrap().threshold else {
                panic!("unexpected saturation");
            };
            let want = (-(-t / 2.0).exp_m1()).powi(ports as i32);
            let got = outage_probability(&cfg, &dist).unwrap();
            assert!((got - want).abs() <= 1e-6, "N={ports} snr={snr}: {got} vs {want}");
        }
    }
}

#[test]
fn large_array_outage_below_small_array() {
    let small = config(5, 0.5, 20, 0.0);
    let large = config(500, 0.5, 20, 0.0);
    let a = outage_probability(&small, &fitted(&small)).unwrap();
    let b = outage_probability(&large, &fitted(&large)).unwrap();
    assert!(b < a, "N=500 {b} vs N=5 {a}");
}

#[test]
fn saturated_outage_is_certain() {
    let cfg = SystemConfig {
        outage_threshold: 0.5,
        ..config(10, 0.5, 20, 20.0)
    };
    assert_eq!(outage_threshold(&cfg).unwrap().threshold, OutageThreshold::Saturated);
    assert_eq!(outage_probability(&cfg, &fitted(&cfg)).unwrap(), 1.0);
    assert_eq!(mrc_outage(3, &cfg).unwrap(), 1.0);
}

#[test]
fn mrc_single_trial_equals_conditional_bound() {
    let cfg = config(1, 1.0, 10, 12.0);
    let gain = mrc_gain_samples(1, cfg.channel_variance, 1, 77).unwrap()[0];
    let want = conditional_bler(10, 5, gain, cfg.codeword_variance(), cfg.noise_variance).unwrap();
    assert_eq!(mrc_conditional_bler(1, &cfg, 1, 77).unwrap(), want);
}

#[test]
fn mrc_diversity_and_seed_stability() {
    let cfg = config(1, 1.0, 10, 12.0);
    let one = mrc_conditional_bler(1, &cfg, 100_000, 3).unwrap();
    let two = mrc_conditional_bler(2, &cfg, 100_000, 3).unwrap();
    assert!(two < one, "L=2 {two} vs L=1 {one}");
    assert!(one > 0.0 && one < 1.0);
    for seed in [4u64, 5, 6, 1234] {
        let other = mrc_conditional_bler_estimate(1, &cfg, 100_000, seed).unwrap();
        assert!(((other.value - one) / one).abs() <= 0.02, "seed {seed}: {} vs {one}", other.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn probability_outputs_stay_in_unit_interval(
        users in 1usize..60,
        blocklength in 1usize..40,
        gain in 0.0..1e4f64,
        noise in 1e-6..1e3f64,
        cw in 1e-3..2.0f64,
    ) {
        let clamped = conditional_bler(users, blocklength, gain, cw, noise).unwrap();
        prop_assert!((0.0..=1.0).contains(&clamped));
        let raw = conditional_bler_raw(users, blocklength, gain, cw, noise).unwrap();
        prop_assert!(raw >= clamped || raw > 1.0);
    }

    #[test]
    fn system_probabilities_stay_in_unit_interval(
        users in 1usize..40,
        snr in -40.0..40.0f64,
        gamma in 1e-6..1.0f64,
        branches in 1usize..6,
        ports in 1usize..12,
    ) {
        let cfg = SystemConfig { outage_threshold: gamma, ..config(ports, 0.5, users, snr) };
        let dist = GainDistribution::new(BlockModel::new(vec![ports], 0.9).unwrap(), 2.0, gauss_laguerre(16).unwrap()).unwrap();
        let op = outage_probability(&cfg, &dist).unwrap();
        prop_assert!((0.0..=1.0).contains(&op));
        let mrc = mrc_outage(branches, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&mrc));
        let bler = statistical_bler(&cfg, &dist).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&bler));
    }
}
