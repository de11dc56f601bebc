//! Block error rate bounds, SINR outage and the MRC reference system.

use rand_distr::{Distribution, Exp1};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::fas_stats::GainDistribution;
use crate::montecarlo::{self, McEstimate};
use crate::quadrature::{integrate_adaptive_with, AdaptiveOptions};
use crate::specfun::{ln_gamma_positive, regularized_gamma_p};
use crate::streams;

/// The gain integral stops where the best-port CDF exceeds `1 - TAIL_MASS`.
const TAIL_MASS: f64 = 1e-10;

/// `2 ln C(users, active)`, the log of the squared binomial coefficient.
pub fn combinatorial_exponent(users: usize, active: usize) -> Result<f64> {
    if active > users {
        return Err(Error::parameter(
            "active_users",
            format!("must lie in 0..={users}, got {active}"),
        ));
    }
    Ok(log_binomial_squared(users, active))
}

fn log_binomial_squared(users: usize, active: usize) -> f64 {
    if active == 0 || active == users {
        return 0.0;
    }
    let lg = |k: usize| ln_gamma_positive(k as f64 + 1.0);
    2.0 * (lg(users) - lg(active) - lg(users - active))
}

/// Precomputed per-subset terms of the conditional block error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerTerms {
    users: usize,
    blocklength: usize,
    exponents: Vec<f64>,
}

impl BlerTerms {
    pub fn new(users: usize, blocklength: usize) -> Result<Self> {
        if users == 0 || blocklength == 0 {
            return Err(Error::parameter("users/blocklength", "both must be >= 1"));
        }
        let exponents = (0..=users).map(|k| log_binomial_squared(users, k)).collect();
        Ok(Self {
            users,
            blocklength,
            exponents,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    /// Exponent for each number of erroneous users `0..=U`.
    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// Effective interference power seen when `active` codewords are confused.
    pub fn interference_variance(active: usize, codeword_variance: f64, gain: f64) -> f64 {
        2.0 * active as f64 * codeword_variance * gain
    }

    /// The bound before clamping; it exceeds 1 at low gain.
    pub fn raw_bound(&self, gain: f64, codeword_variance: f64, noise_variance: f64) -> f64 {
        let m = self.blocklength as f64;
        let u = self.users as f64;
        (1..=self.users)
            .map(|k| {
                let ratio =
                    0.25 * Self::interference_variance(k, codeword_variance, gain) / noise_variance;
                (k as f64 / u) * (self.exponents[k] - m * ratio.ln_1p()).exp()
            })
            .sum()
    }

    /// The bound as a probability.
    pub fn bound(&self, gain: f64, codeword_variance: f64, noise_variance: f64) -> f64 {
        self.raw_bound(gain, codeword_variance, noise_variance).clamp(0.0, 1.0)
    }
}

fn check_bler_args(gain: f64, codeword_variance: f64, noise_variance: f64) -> Result<()> {
    if !(gain.is_finite() && gain >= 0.0) {
        return Err(Error::domain("conditional_bler", format!("gain must be finite and >= 0, got {gain}")));
    }
    for (name, v) in [("codeword_variance", codeword_variance), ("noise_variance", noise_variance)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::parameter(name, format!("must be finite and > 0, got {v}")));
        }
    }
    Ok(())
}

/// Block error probability bound for a known best-port gain, clamped to `[0, 1]`.
pub fn conditional_bler(
    users: usize,
    blocklength: usize,
    gain: f64,
    codeword_variance: f64,
    noise_variance: f64,
) -> Result<f64> {
    check_bler_args(gain, codeword_variance, noise_variance)?;
    Ok(BlerTerms::new(users, blocklength)?.bound(gain, codeword_variance, noise_variance))
}

/// [`conditional_bler`] without the clamp.
pub fn conditional_bler_raw(
    users: usize,
    blocklength: usize,
    gain: f64,
    codeword_variance: f64,
    noise_variance: f64,
) -> Result<f64> {
    check_bler_args(gain, codeword_variance, noise_variance)?;
    Ok(BlerTerms::new(users, blocklength)?.raw_bound(gain, codeword_variance, noise_variance))
}

/// An integral over the gain distribution with its numerical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticalBler {
    pub value: f64,
    pub error_estimate: f64,
    /// False when adaptive integration stopped before reaching tolerance.
    pub converged: bool,
}

fn check_consistent(config: &SystemConfig, dist: &GainDistribution) -> Result<()> {
    config.validate()?;
    if config.channel_variance != dist.channel_variance() {
        return Err(Error::parameter(
            "channel_variance",
            format!(
                "configuration has {} but the distribution was built for {}",
                config.channel_variance,
                dist.channel_variance()
            ),
        ));
    }
    Ok(())
}

/// Gain beyond which the best-port CDF exceeds `1 - TAIL_MASS`.
fn tail_cutoff(dist: &GainDistribution) -> Result<f64> {
    let mut t = 4.0 * dist.channel_variance();
    while dist.cdf_unchecked(t) < 1.0 - TAIL_MASS {
        t *= 2.0;
        if !t.is_finite() {
            return Err(Error::convergence("statistical_bler", "gain tail does not decay"));
        }
    }
    Ok(t)
}

fn outer_options() -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-8,
        max_panels: 1_000,
        max_depth: 40,
    }
}

/// Average of the clamped conditional bound over the best-port gain law.
///
/// Below the gain `t*` at which the raw bound equals 1 the clamped integrand
/// is the density itself, so that part is the exact CDF value `F(t*)`; the
/// remainder is integrated adaptively up to the tail cutoff.
pub fn statistical_bler(config: &SystemConfig, dist: &GainDistribution) -> Result<StatisticalBler> {
    check_consistent(config, dist)?;
    let terms = BlerTerms::new(config.users, config.blocklength)?;
    let cw = config.codeword_variance();
    let noise = config.noise_variance;
    let raw = |t: f64| terms.raw_bound(t, cw, noise);

    let mut hi = dist.channel_variance();
    while raw(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if raw(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let crossing = hi;
    let head = dist.cdf_unchecked(crossing);
    let cutoff = tail_cutoff(dist)?;
    if crossing >= cutoff {
        return Ok(StatisticalBler {
            value: head.clamp(0.0, 1.0),
            error_estimate: TAIL_MASS,
            converged: true,
        });
    }
    let body = integrate_adaptive_with(
        |t| dist.pdf_unchecked(t) * raw(t).min(1.0),
        crossing,
        cutoff,
        &outer_options(),
    )?;
    Ok(StatisticalBler {
        value: (head + body.value).clamp(0.0, 1.0),
        error_estimate: body.error_estimate + TAIL_MASS,
        converged: body.converged,
    })
}

/// Average of the unclamped bound; useful for judging how loose the bound is.
pub fn statistical_bler_raw(config: &SystemConfig, dist: &GainDistribution) -> Result<StatisticalBler> {
    check_consistent(config, dist)?;
    let terms = BlerTerms::new(config.users, config.blocklength)?;
    let cw = config.codeword_variance();
    let noise = config.noise_variance;
    let cutoff = tail_cutoff(dist)?;
    let body = integrate_adaptive_with(
        |t| {
            if t == 0.0 {
                0.0
            } else {
                dist.pdf_unchecked(t) * terms.raw_bound(t, cw, noise)
            }
        },
        0.0,
        cutoff,
        &outer_options(),
    )?;
    Ok(StatisticalBler {
        value: body.value,
        error_estimate: body.error_estimate,
        converged: body.converged,
    })
}

/// `sqrt(pi / (4 M))`, the mean magnitude of the correlation between two
/// random codewords of length `M`.
pub fn codeword_correlation(blocklength: usize) -> Result<f64> {
    if blocklength == 0 {
        return Err(Error::parameter("blocklength", "must be >= 1"));
    }
    Ok((std::f64::consts::PI / (4.0 * blocklength as f64)).sqrt())
}

/// Gain threshold below which the SINR falls short of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutageThreshold {
    Finite(f64),
    /// Interference alone exceeds the target; outage is certain.
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageSpec {
    pub gamma_th: f64,
    pub rho_bar: f64,
    pub threshold: OutageThreshold,
}

/// Gain threshold `sigma_eta^2 gamma / (1 - (U - 1)(U rho + 1) gamma)`.
pub fn outage_threshold(config: &SystemConfig) -> Result<OutageSpec> {
    config.validate()?;
    let rho_bar = codeword_correlation(config.blocklength)?;
    let gamma = config.outage_threshold;
    let users = config.users as f64;
    let denominator = 1.0 - (users - 1.0) * (users * rho_bar + 1.0) * gamma;
    let threshold = if denominator > 0.0 {
        OutageThreshold::Finite(config.noise_variance * gamma / denominator)
    } else {
        OutageThreshold::Saturated
    };
    Ok(OutageSpec {
        gamma_th: gamma,
        rho_bar,
        threshold,
    })
}

/// Probability that the best-port gain falls below the outage threshold.
pub fn outage_probability(config: &SystemConfig, dist: &GainDistribution) -> Result<f64> {
    check_consistent(config, dist)?;
    match outage_threshold(config)?.threshold {
        OutageThreshold::Saturated => Ok(1.0),
        OutageThreshold::Finite(t) => dist.cdf(t),
    }
}

/// Outage probability of `branches`-antenna maximum ratio combining over
/// independent Rayleigh branches: `P(L, t_th / sigma^2)`.
pub fn mrc_outage(branches: usize, config: &SystemConfig) -> Result<f64> {
    if branches == 0 {
        return Err(Error::parameter("branches", "must be >= 1"));
    }
    match outage_threshold(config)?.threshold {
        OutageThreshold::Saturated => Ok(1.0),
        OutageThreshold::Finite(t) => {
            regularized_gamma_p(branches as f64, t / config.channel_variance)
        }
    }
}

/// Combined MRC gains `sum_l |g_l|^2`, each a sum of `branches` exponentials
/// with mean `channel_variance`.
pub fn mrc_gain_samples(
    branches: usize,
    channel_variance: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if branches == 0 || trials == 0 {
        return Err(Error::parameter("branches/trials", "both must be >= 1"));
    }
    if !(channel_variance.is_finite() && channel_variance > 0.0) {
        return Err(Error::parameter("channel_variance", "must be finite and > 0"));
    }
    let chunks = streams::map_chunks(trials, seed, |rng, len| {
        (0..len)
            .map(|_| {
                let draws: f64 = (0..branches).map(|_| -> f64 { Exp1.sample(rng) }).sum();
                channel_variance * draws
            })
            .collect::<Vec<f64>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte Carlo average of the conditional bound over MRC combined gains.
pub fn mrc_conditional_bler_estimate(
    branches: usize,
    config: &SystemConfig,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    config.validate()?;
    let gains = mrc_gain_samples(branches, config.channel_variance, trials, seed)?;
    montecarlo::bound_average(&gains, config, seed)
}

/// Mean of the clamped conditional bound over `trials` MRC gain draws.
pub fn mrc_conditional_bler(
    branches: usize,
    config: &SystemConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    mrc_conditional_bler_estimate(branches, config, trials, seed).map(|e| e.value)
}
