//! Distribution of the best-port gain `max_k |g_k|^2` under the block model.
//!
//! Each block of `L` ports sharing correlation `mu2` contributes a factor
//!
//! ```text
//! G(t) = int_0^inf exp(-u) [1 - Q1(sqrt(c u), sqrt(x))]^L du,
//!        c = 2 mu2 / (1 - mu2),  x = t' / (1 - mu2),
//! ```
//!
//! where `t' = 2 t / sigma^2` is the gain on the unit-variance-per-dimension
//! reference scale. The CDF is the product of the block factors, and the
//! density follows from differentiating that product.

use crate::channel::{build_correlation, fit_block_model, BlockFit, BlockModel};
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_adaptive_with, AdaptiveOptions, AdaptiveResult, ExpWindow, QuadratureRule,
};
use crate::specfun::{marcum_tails_unchecked, ncx2_pdf_unchecked};

/// Distance, in standard deviations of the block's common component, below
/// the Marcum transition at which the bracket is 1 to double precision.
const WINDOW_LOWER_SIGMAS: f64 = 9.0;
/// Distance above the transition beyond which the bracket is negligible.
const WINDOW_UPPER_SIGMAS: f64 = 6.0;
/// Widest window, in units of the exponential weight's scale.
const WINDOW_MAX_SPAN: f64 = 40.0;

/// Where the Gauss–Laguerre nodes are placed for each block integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodePlacement {
    /// Nodes shifted and compressed onto the interval where the bracket
    /// changes, with the analytically known head of the integral added
    /// exactly. Accurate at any `mu2 < 1`.
    #[default]
    Windowed,
    /// Nodes used as-is on `u >= 0`. Loses accuracy as `mu2 -> 1`, when the
    /// bracket turns into a step narrower than the node spacing.
    Plain,
}

/// Integrand data shared by the CDF and density factors of one block.
#[derive(Debug, Clone, Copy)]
struct BlockKernel {
    mu2: f64,
    /// Non-centrality per unit of `u`.
    rate: f64,
    /// Normalised threshold `x`.
    level: f64,
}

impl BlockKernel {
    fn new(t_ref: f64, mu2: f64) -> Self {
        Self {
            mu2,
            rate: 2.0 * mu2 / (1.0 - mu2),
            level: t_ref / (1.0 - mu2),
        }
    }

    /// Returns the node placement and the mass of `exp(-u)` over the skipped
    /// head, on which the bracket is 1.
    fn window(&self, rule: &QuadratureRule, placement: NodePlacement) -> (ExpWindow, f64) {
        match placement {
            NodePlacement::Plain => (ExpWindow::IDENTITY, 0.0),
            NodePlacement::Windowed => {
                let root = self.level.sqrt();
                let lo = (root - WINDOW_LOWER_SIGMAS).max(0.0);
                let shift = lo * lo / self.rate;
                let top = ((root + WINDOW_UPPER_SIGMAS).powi(2) / self.rate).min(shift + WINDOW_MAX_SPAN);
                let scale = ((top - shift) / rule.largest_node()).min(1.0);
                (ExpWindow { shift, scale }, -(-shift).exp_m1())
            }
        }
    }

    fn lower_tail(&self, u: f64) -> f64 {
        marcum_tails_unchecked((self.rate * u).sqrt(), self.level.sqrt()).lower
    }

    fn cdf_factor(&self, size: usize, rule: &QuadratureRule, placement: NodePlacement) -> f64 {
        if self.level == 0.0 {
            return 0.0;
        }
        let (window, head) = self.window(rule, placement);
        let power = size as i32;
        let body: f64 = window
            .nodes(rule)
            .zip(window.coefficients(rule))
            .map(|(u, c)| c * self.lower_tail(u).powi(power))
            .sum();
        (head + body).clamp(0.0, 1.0)
    }

    /// Derivative of [`Self::cdf_factor`] with respect to `t_ref`.
    fn pdf_factor(&self, size: usize, rule: &QuadratureRule, placement: NodePlacement) -> f64 {
        let (window, _) = self.window(rule, placement);
        let power = size as i32 - 1;
        let scale = size as f64 / (1.0 - self.mu2);
        let body: f64 = window
            .nodes(rule)
            .zip(window.coefficients(rule))
            .map(|(u, c)| {
                let bracket = if power == 0 {
                    1.0
                } else {
                    self.lower_tail(u).powi(power)
                };
                c * bracket * ncx2_pdf_unchecked(self.level, self.rate * u)
            })
            .sum();
        (scale * body).max(0.0)
    }
}

fn check_block_args(t_ref: f64, size: usize, mu2: f64) -> Result<()> {
    if !(t_ref.is_finite() && t_ref >= 0.0) {
        return Err(Error::domain("block factor", format!("t must be finite and >= 0, got {t_ref}")));
    }
    if size == 0 {
        return Err(Error::parameter("block_size", "must be >= 1"));
    }
    if !(mu2 > 0.0 && mu2 < 1.0) {
        return Err(Error::parameter("mu2", format!("must lie in (0, 1), got {mu2}")));
    }
    Ok(())
}

/// Probability that every port of one block of `size` ports stays at or below
/// `t_ref` on the reference scale (`sigma^2 = 2`).
pub fn block_cdf_factor(
    t_ref: f64,
    size: usize,
    mu2: f64,
    rule: &QuadratureRule,
    placement: NodePlacement,
) -> Result<f64> {
    check_block_args(t_ref, size, mu2)?;
    Ok(BlockKernel::new(t_ref, mu2).cdf_factor(size, rule, placement))
}

/// Derivative of [`block_cdf_factor`] with respect to `t_ref`.
pub fn block_pdf_factor(
    t_ref: f64,
    size: usize,
    mu2: f64,
    rule: &QuadratureRule,
    placement: NodePlacement,
) -> Result<f64> {
    check_block_args(t_ref, size, mu2)?;
    Ok(BlockKernel::new(t_ref, mu2).pdf_factor(size, rule, placement))
}

fn reference_options(tol: f64) -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panels: 4_000,
        max_depth: 40,
    }
}

/// [`block_cdf_factor`] by adaptive Gauss–Kronrod integration of the
/// untransformed integral over the common-component power `r`.
pub fn block_cdf_factor_reference(t_ref: f64, size: usize, mu2: f64, tol: f64) -> Result<AdaptiveResult> {
    check_block_args(t_ref, size, mu2)?;
    let b = (t_ref / (1.0 - mu2)).sqrt();
    let integrand = |r: f64| {
        let a = (mu2 * r / (1.0 - mu2)).sqrt();
        0.5 * (-0.5 * r).exp() * marcum_tails_unchecked(a, b).lower.powi(size as i32)
    };
    split_reference(integrand, t_ref / mu2, tol)
}

/// [`block_pdf_factor`] by adaptive integration over `r`.
pub fn block_pdf_factor_reference(t_ref: f64, size: usize, mu2: f64, tol: f64) -> Result<AdaptiveResult> {
    check_block_args(t_ref, size, mu2)?;
    let x = t_ref / (1.0 - mu2);
    let b = x.sqrt();
    let integrand = |r: f64| {
        let lambda = mu2 * r / (1.0 - mu2);
        let bracket = marcum_tails_unchecked(lambda.sqrt(), b).lower.powi(size as i32 - 1);
        0.5 * (-0.5 * r).exp() * size as f64 * bracket * ncx2_pdf_unchecked(x, lambda) / (1.0 - mu2)
    };
    split_reference(integrand, t_ref / mu2, tol)
}

/// Integrates over `[0, inf)` with a breakpoint at the Marcum transition.
fn split_reference<F: Fn(f64) -> f64>(f: F, transition: f64, tol: f64) -> Result<AdaptiveResult> {
    let options = reference_options(0.5 * tol);
    let head = integrate_adaptive_with(&f, 0.0, transition, &options)?;
    let tail = integrate_adaptive_with(&f, transition, f64::INFINITY, &options)?;
    Ok(AdaptiveResult {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
        converged: head.converged && tail.converged,
        evaluations: head.evaluations + tail.evaluations,
    })
}

/// Law of the best-port gain for a fitted block model.
#[derive(Debug, Clone, PartialEq)]
pub struct GainDistribution {
    model: BlockModel,
    channel_variance: f64,
    rule: QuadratureRule,
    placement: NodePlacement,
    /// Distinct block sizes with their multiplicities.
    groups: Vec<(usize, i32)>,
}

impl GainDistribution {
    pub fn new(model: BlockModel, channel_variance: f64, rule: QuadratureRule) -> Result<Self> {
        if !(channel_variance.is_finite() && channel_variance > 0.0) {
            return Err(Error::parameter(
                "channel_variance",
                format!("must be finite and > 0, got {channel_variance}"),
            ));
        }
        let mut groups: Vec<(usize, i32)> = Vec::new();
        let mut sizes = model.block_sizes().to_vec();
        sizes.sort_unstable();
        for size in sizes {
            match groups.last_mut() {
                Some((s, m)) if *s == size => *m += 1,
                _ => groups.push((size, 1)),
            }
        }
        Ok(Self {
            model,
            channel_variance,
            rule,
            placement: NodePlacement::default(),
            groups,
        })
    }

    /// Fits the block model to an array of `ports` ports over
    /// `antenna_length` wavelengths and builds its gain law. A single port is
    /// one block of size 1.
    pub fn for_array(
        ports: usize,
        antenna_length: f64,
        mu2: f64,
        channel_variance: f64,
        rule: QuadratureRule,
    ) -> Result<(Self, BlockFit)> {
        let fit = if ports == 1 {
            BlockFit {
                model: BlockModel::new(vec![1], mu2)?,
                leading_eigenvalues: vec![1.0],
                warning: None,
            }
        } else {
            fit_block_model(&build_correlation(ports, antenna_length)?, mu2)?
        };
        let dist = Self::new(fit.model.clone(), channel_variance, rule)?;
        Ok((dist, fit))
    }

    pub fn with_placement(mut self, placement: NodePlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn model(&self) -> &BlockModel {
        &self.model
    }

    pub fn channel_variance(&self) -> f64 {
        self.channel_variance
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn placement(&self) -> NodePlacement {
        self.placement
    }

    fn reference_gain(&self, t: f64) -> f64 {
        2.0 * t / self.channel_variance
    }

    /// `P(max_k |g_k|^2 <= t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("cdf_gfas", format!("t must be >= 0, got {t}")));
        }
        Ok(self.cdf_unchecked(t))
    }

    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return 1.0;
        }
        let kernel = BlockKernel::new(self.reference_gain(t), self.model.mu2());
        self.groups
            .iter()
            .map(|&(size, count)| kernel.cdf_factor(size, &self.rule, self.placement).powi(count))
            .product::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Density of the best-port gain at `t > 0`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain("pdf_gfas", format!("t must be finite and > 0, got {t}")));
        }
        Ok(self.pdf_unchecked(t))
    }

    pub(crate) fn pdf_unchecked(&self, t: f64) -> f64 {
        let kernel = BlockKernel::new(self.reference_gain(t), self.model.mu2());
        let factors: Vec<(f64, f64, i32)> = self
            .groups
            .iter()
            .map(|&(size, count)| {
                (
                    kernel.cdf_factor(size, &self.rule, self.placement),
                    kernel.pdf_factor(size, &self.rule, self.placement),
                    count,
                )
            })
            .collect();
        // Product rule over groups: d(G^m) = m G^(m-1) dG.
        let mut total = 0.0;
        for (i, &(g, dg, m)) in factors.iter().enumerate() {
            let mut term = m as f64 * dg * g.powi(m - 1);
            for (j, &(other, _, k)) in factors.iter().enumerate() {
                if i != j {
                    term *= other.powi(k);
                }
            }
            total += term;
        }
        (2.0 / self.channel_variance * total).max(0.0)
    }

    /// Smallest `t` with `cdf(t) >= p`, by bisection to relative width 1e-13.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("quantile", format!("p must lie in (0, 1), got {p}")));
        }
        let mut hi = self.channel_variance;
        while self.cdf_unchecked(hi) < p {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::convergence("quantile", "could not bracket the quantile"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_unchecked(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        Ok(hi)
    }
}

/// Distribution function of the best-port gain.
pub fn cdf_gfas(dist: &GainDistribution, t: f64) -> Result<f64> {
    dist.cdf(t)
}

/// Density of the best-port gain.
pub fn pdf_gfas(dist: &GainDistribution, t: f64) -> Result<f64> {
    dist.pdf(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_laguerre;

    fn dist(sizes: Vec<usize>, mu2: f64, variance: f64) -> GainDistribution {
        let model = BlockModel::new(sizes, mu2).unwrap();
        GainDistribution::new(model, variance, gauss_laguerre(32).unwrap()).unwrap()
    }

    #[test]
    fn single_port_block_is_exponential() {
        let rule = gauss_laguerre(32).unwrap();
        for mu2 in [0.01, 0.5, 0.97, 0.995] {
            for t in [0.01, 0.5, 2.0, 9.0, 40.0] {
                let g = block_cdf_factor(t, 1, mu2, &rule, NodePlacement::Windowed).unwrap();
                let exact = -(-0.5 * t).exp_m1();
                assert!((g - exact).abs() < 1e-9, "mu2={mu2} t={t} g={g} exact={exact}");
                let d = block_pdf_factor(t, 1, mu2, &rule, NodePlacement::Windowed).unwrap();
                let exact_d = 0.5 * (-0.5 * t).exp();
                assert!((d - exact_d).abs() < 1e-7 * exact_d.max(1e-3), "pdf mu2={mu2} t={t}");
            }
        }
    }

    #[test]
    fn plain_placement_degrades_at_strong_correlation() {
        let rule = gauss_laguerre(32).unwrap();
        let t = 2.0;
        let reference = block_cdf_factor_reference(t, 3, 0.9409, 1e-12).unwrap().value;
        let windowed = block_cdf_factor(t, 3, 0.9409, &rule, NodePlacement::Windowed).unwrap();
        let plain = block_cdf_factor(t, 3, 0.9409, &rule, NodePlacement::Plain).unwrap();
        assert!((windowed - reference).abs() < 1e-8);
        assert!((plain - reference).abs() > (windowed - reference).abs());
    }

    #[test]
    fn cdf_boundaries() {
        let d = dist(vec![9, 1], 0.97, 2.0);
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        assert!((d.cdf(1e6).unwrap() - 1.0).abs() < 1e-9);
        assert!(d.cdf(-1.0).is_err());
        assert!(d.pdf(0.0).is_err());
    }

    #[test]
    fn variance_rescaling_is_exact() {
        let a = dist(vec![4, 2], 0.9, 2.0);
        let b = dist(vec![4, 2], 0.9, 5.0);
        for t in [0.3, 1.0, 4.0] {
            assert_eq!(a.cdf(t).unwrap(), b.cdf(t * 2.5).unwrap());
            assert!((a.pdf(t).unwrap() - 2.5 * b.pdf(t * 2.5).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = dist(vec![9, 1], 0.97, 2.0);
        for p in [0.01, 0.5, 0.9999] {
            let t = d.quantile(p).unwrap();
            assert!((d.cdf(t).unwrap() - p).abs() < 1e-10);
        }
    }
}
