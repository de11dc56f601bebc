//! Simulation of the exact Toeplitz-correlated channel with best-port
//! selection. This is deliberately independent of the block model so that
//! comparisons expose the block approximation error.

use crate::channel::{build_correlation, eigen_factor, ChannelSampler, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{outage_threshold, BlerTerms, OutageThreshold};
use crate::streams;

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1_000;

/// Estimates backed by fewer hits than this have unreliable relative error.
pub const RARE_EVENT_HITS: usize = 10;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub seed: u64,
    /// Set for probability estimates resting on fewer than
    /// [`RARE_EVENT_HITS`] events.
    pub rare: bool,
}

impl McEstimate {
    /// Proportion `hits / samples` with the binomial standard error.
    pub fn from_hits(hits: usize, samples: usize, seed: u64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            value: p,
            standard_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            seed,
            rare: hits < RARE_EVENT_HITS,
        }
    }

    /// Sample mean with standard error `s / sqrt(n)`.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I, seed: u64) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in values {
            // Welford's update, applied in sample order.
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self {
            value: mean,
            standard_error: (variance / n.max(1) as f64).sqrt(),
            samples: n,
            seed,
            rare: false,
        }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::parameter(
            "samples",
            format!("must be >= {MIN_SAMPLES}, got {samples}"),
        ));
    }
    Ok(())
}

fn exact_sampler(ports: usize, antenna_length: f64, channel_variance: f64) -> Result<ChannelSampler> {
    if ports == 1 {
        return ChannelSampler::independent(1, channel_variance);
    }
    let factor = eigen_factor(&build_correlation(ports, antenna_length)?)?;
    ChannelSampler::new(&factor, channel_variance)
}

/// Best-port gains `max_k |g_k|^2` of `samples` exact-model draws, in draw
/// order. Identical for any number of worker threads.
pub fn max_gain_samples(
    ports: usize,
    antenna_length: f64,
    channel_variance: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::parameter("samples", "must be >= 1"));
    }
    let sampler = exact_sampler(ports, antenna_length, channel_variance)?;
    let chunks = streams::map_chunks(samples, seed, |rng, len| {
        let mut re = vec![0.0; ports];
        let mut im = vec![0.0; ports];
        (0..len)
            .map(|_| sampler.draw_max_gain(rng, &mut re, &mut im))
            .collect::<Vec<f64>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Empirical CDF of the best-port gain at each point of an ascending grid.
pub fn empirical_gain_cdf(
    ports: usize,
    antenna_length: f64,
    channel_variance: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_samples(samples)?;
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::parameter("t_grid", "must be ascending"));
    }
    let mut gains = max_gain_samples(ports, antenna_length, channel_variance, samples, seed)?;
    gains.sort_unstable_by(f64::total_cmp);
    Ok(t_grid
        .iter()
        .map(|&t| McEstimate::from_hits(gains.partition_point(|&g| g <= t), samples, seed))
        .collect())
}

/// Mean of the clamped conditional block error bound over exact-model draws.
pub fn empirical_statistical_bler(config: &SystemConfig, samples: usize, seed: u64) -> Result<McEstimate> {
    config.validate()?;
    check_samples(samples)?;
    let gains = max_gain_samples(
        config.ports,
        config.antenna_length,
        config.channel_variance,
        samples,
        seed,
    )?;
    bound_average(&gains, config, seed)
}

/// Mean of the clamped conditional bound over given gain draws. Sweeps reuse
/// one batch of draws across users and SNR this way.
pub fn bound_average(gains: &[f64], config: &SystemConfig, seed: u64) -> Result<McEstimate> {
    config.validate()?;
    let terms = BlerTerms::new(config.users, config.blocklength)?;
    let cw = config.codeword_variance();
    Ok(McEstimate::from_values(
        gains.iter().map(|&g| terms.bound(g, cw, config.noise_variance)),
        seed,
    ))
}

/// Fraction of exact-model draws whose best-port gain is at or below the
/// outage threshold.
pub fn empirical_outage(config: &SystemConfig, samples: usize, seed: u64) -> Result<McEstimate> {
    config.validate()?;
    check_samples(samples)?;
    if outage_threshold(config)?.threshold == OutageThreshold::Saturated {
        return outage_fraction(&[], config, samples, seed);
    }
    let gains = max_gain_samples(
        config.ports,
        config.antenna_length,
        config.channel_variance,
        samples,
        seed,
    )?;
    outage_fraction(&gains, config, samples, seed)
}

/// Outage fraction over given gain draws; `samples` is the draw count, which
/// is all that is needed when the threshold is saturated.
pub fn outage_fraction(gains: &[f64], config: &SystemConfig, samples: usize, seed: u64) -> Result<McEstimate> {
    let threshold = match outage_threshold(config)?.threshold {
        OutageThreshold::Saturated => {
            return Ok(McEstimate {
                value: 1.0,
                standard_error: 0.0,
                samples,
                seed,
                rare: false,
            })
        }
        OutageThreshold::Finite(t) => t,
    };
    if gains.len() != samples {
        return Err(Error::parameter(
            "gains",
            format!("expected {samples} draws, got {}", gains.len()),
        ));
    }
    let hits = gains.iter().filter(|&&g| g <= threshold).count();
    Ok(McEstimate::from_hits(hits, samples, seed))
}
