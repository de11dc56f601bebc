//! Gauss–Laguerre rules, exponential-weight integration and an adaptive
//! Gauss–Kronrod integrator that serves as an independent oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_ql, FirstRow};

/// Largest supported Gauss–Laguerre order.
pub const MAX_ORDER: usize = 256;

/// Order used throughout when the caller does not choose one.
pub const DEFAULT_ORDER: usize = 32;

/// Symmetric tridiagonal Jacobi matrix of the Laguerre recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiTridiagonal {
    diagonal: Vec<f64>,
    offdiagonal: Vec<f64>,
}

impl JacobiTridiagonal {
    /// Diagonal `2k + 1` and off-diagonal `k` for the monic Laguerre family.
    pub fn laguerre(order: usize) -> Self {
        Self {
            diagonal: (0..order).map(|k| (2 * k + 1) as f64).collect(),
            offdiagonal: (1..order).map(|k| k as f64).collect(),
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn offdiagonal(&self) -> &[f64] {
        &self.offdiagonal
    }
}

/// Nodes and weights of an n-point rule for `int_0^inf exp(-x) f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in strictly increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Natural logarithms of the weights, accurate even where the weights
    /// themselves underflow.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn largest_node(&self) -> f64 {
        *self.nodes.last().expect("rules have at least one node")
    }
}

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix together with
/// the first component of each unit eigenvector.
pub fn tridiag_eigen(diagonal: &[f64], offdiagonal: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diagonal.len();
    if n == 0 {
        return Err(Error::parameter("diagonal", "matrix must not be empty"));
    }
    let mut values = diagonal.to_vec();
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    let mut sink = FirstRow(first);
    tridiagonal_ql(&mut values, offdiagonal, &mut sink)?;
    Ok((values, sink.0))
}

/// Gauss–Laguerre rule of the given order by the Golub–Welsch construction.
///
/// Nodes are the Jacobi eigenvalues. Weights start as the squared first
/// eigenvector components; both are then refined by Newton steps on the
/// Laguerre recurrence so that the exponentially small weights of the outer
/// nodes carry full relative precision.
pub fn gauss_laguerre(order: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::parameter(
            "order",
            format!("must lie in 1..={MAX_ORDER}, got {order}"),
        ));
    }
    let jacobi = JacobiTridiagonal::laguerre(order);
    let (mut nodes, first_row) = tridiag_eigen(jacobi.diagonal(), jacobi.offdiagonal())?;
    let mut log_weights: Vec<f64> = first_row.iter().map(|z| 2.0 * z.abs().ln()).collect();

    for (x, log_w) in nodes.iter_mut().zip(log_weights.iter_mut()) {
        let mut refined = *x;
        for _ in 0..4 {
            let eval = LaguerreEval::at(order, refined);
            let step = eval.newton_step();
            refined -= step;
            if step.abs() <= 4.0 * f64::EPSILON * refined {
                break;
            }
        }
        // Accept the polish only when it stays on the same root.
        if (refined - *x).abs() <= 1e-8 * x.max(1.0) {
            *x = refined;
            *log_w = LaguerreEval::at(order, refined).log_weight();
        }
    }

    if nodes.windows(2).any(|w| w[0] >= w[1]) || nodes[0] <= 0.0 {
        return Err(Error::convergence(
            "gauss_laguerre",
            "nodes are not strictly increasing and positive",
        ));
    }
    let weights = log_weights.iter().map(|l| l.exp()).collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        log_weights,
    })
}

/// `L_n(x)` and `L_{n-1}(x)` with a common logarithmic scale factor.
struct LaguerreEval {
    order: usize,
    x: f64,
    current: f64,
    previous: f64,
    log_scale: f64,
}

impl LaguerreEval {
    fn at(order: usize, x: f64) -> Self {
        let mut previous = 1.0;
        let mut current = 1.0 - x;
        let mut log_scale = 0.0;
        if order == 1 {
            return Self {
                order,
                x,
                current,
                previous,
                log_scale,
            };
        }
        for k in 1..order {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - x) * current - kf * previous) / (kf + 1.0);
            previous = current;
            current = next;
            let magnitude = current.abs().max(previous.abs());
            if magnitude > 1e100 {
                current /= magnitude;
                previous /= magnitude;
                log_scale += magnitude.ln();
            }
        }
        Self {
            order,
            x,
            current,
            previous,
            log_scale,
        }
    }

    /// Scaled derivative `L_n'(x)` (same scale as `current`).
    fn derivative(&self) -> f64 {
        self.order as f64 * (self.current - self.previous) / self.x
    }

    fn newton_step(&self) -> f64 {
        self.current / self.derivative()
    }

    /// `ln w = -ln x - 2 ln |L_n'(x)|`.
    fn log_weight(&self) -> f64 {
        -self.x.ln() - 2.0 * (self.derivative().abs().ln() + self.log_scale)
    }
}

/// `sum_i w_i f(x_i)`, the rule's approximation of `int_0^inf exp(-x) f(x) dx`.
pub fn integrate_exp_weight<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    let mut total = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let value = f(x);
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: x, value });
        }
        total += w * value;
    }
    Ok(total)
}

/// Affine placement of a Gauss–Laguerre rule on `[shift, inf)`.
///
/// With `u = shift + scale * v` the identity
/// `int_shift^inf exp(-u) h(u) du = scale * exp(-shift) * int_0^inf exp(-v) [exp((1 - scale) v) h(u)] dv`
/// lets a rule concentrate its nodes where `h` varies, instead of spreading
/// them over the fixed range of the unit-rate exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpWindow {
    pub shift: f64,
    pub scale: f64,
}

impl ExpWindow {
    pub const IDENTITY: ExpWindow = ExpWindow {
        shift: 0.0,
        scale: 1.0,
    };

    /// Physical node positions `shift + scale * x_i`.
    pub fn nodes<'a>(&'a self, rule: &'a QuadratureRule) -> impl Iterator<Item = f64> + 'a {
        rule.nodes.iter().map(move |v| self.shift + self.scale * v)
    }

    /// Effective weights so that `int_shift^inf exp(-u) h(u) du ~ sum_i c_i h(u_i)`.
    pub fn coefficients<'a>(&'a self, rule: &'a QuadratureRule) -> impl Iterator<Item = f64> + 'a {
        let base = self.scale.ln() - self.shift;
        rule.nodes
            .iter()
            .zip(&rule.log_weights)
            .map(move |(v, lw)| (lw + base + (1.0 - self.scale) * v).exp())
    }
}

/// `int_shift^inf exp(-u) h(u) du` through the placed rule.
pub fn integrate_exp_weight_window<F: Fn(f64) -> f64>(
    h: F,
    rule: &QuadratureRule,
    window: ExpWindow,
) -> Result<f64> {
    let mut total = 0.0;
    for (u, c) in window.nodes(rule).zip(window.coefficients(rule)) {
        let value = h(u);
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: u, value });
        }
        total += c * value;
    }
    Ok(total)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed entries of `GK_NODES`.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tuning for [`integrate_adaptive_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of panels alive at once.
    pub max_panels: usize,
    /// Panels are never bisected beyond this depth.
    pub max_depth: u32,
}

impl AdaptiveOptions {
    pub fn absolute(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            max_panels: 2_000,
            max_depth: 40,
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error_estimate: f64,
    /// False when the panel budget or depth cap stopped refinement early.
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `int_lower^upper f(x) dx` to absolute tolerance `tol`; `upper` may be
/// `f64::INFINITY`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    tol: f64,
) -> Result<AdaptiveResult> {
    integrate_adaptive_with(f, lower, upper, &AdaptiveOptions::absolute(tol))
}

/// Globally adaptive 7/15-point Gauss–Kronrod integration.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate meets `max(abs_tol, rel_tol * |value|)`. A semi-infinite range is
/// mapped to `(0, 1]` through `x = lower + (1 - s) / s`.
pub fn integrate_adaptive_with<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    options: &AdaptiveOptions,
) -> Result<AdaptiveResult> {
    if !(options.abs_tol > 0.0 || options.rel_tol > 0.0) {
        return Err(Error::parameter("tol", "a positive tolerance is required"));
    }
    if !lower.is_finite() || upper.is_nan() || upper == f64::NEG_INFINITY {
        return Err(Error::parameter("bounds", "lower must be finite and upper > -inf"));
    }
    if upper.is_infinite() {
        let mapped = |s: f64| {
            let x = lower + (1.0 - s) / s;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        };
        return adaptive_core(&mapped, 0.0, 1.0, options);
    }
    if upper < lower {
        let r = adaptive_core(&f, upper, lower, options)?;
        return Ok(AdaptiveResult {
            value: -r.value,
            ..r
        });
    }
    adaptive_core(&f, lower, upper, options)
}

fn adaptive_core<F: Fn(f64) -> f64>(
    f: &F,
    lower: f64,
    upper: f64,
    options: &AdaptiveOptions,
) -> Result<AdaptiveResult> {
    let mut evaluations = 0;
    if lower == upper {
        return Ok(AdaptiveResult {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
            evaluations,
        });
    }
    let first = kronrod_panel(f, lower, upper, 0, &mut evaluations)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    let mut frozen_error = 0.0;
    let mut frozen_value = 0.0;
    let mut converged = true;

    loop {
        let target = options.abs_tol.max(options.rel_tol * value.abs());
        if error <= target {
            break;
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        if worst.depth >= options.max_depth || heap.len() + 2 > options.max_panels {
            // The worst panel cannot be refined: stop with what we have.
            frozen_error += worst.error;
            frozen_value += worst.value;
            converged = false;
            if heap.len() + 2 > options.max_panels {
                break;
            }
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = kronrod_panel(f, worst.lo, mid, worst.depth + 1, &mut evaluations)?;
        let right = kronrod_panel(f, mid, worst.hi, worst.depth + 1, &mut evaluations)?;
        heap.push(left);
        heap.push(right);
        // Recompute from scratch to avoid drift in the running sums.
        value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
        error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
    }
    value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
    error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
    let target = options.abs_tol.max(options.rel_tol * value.abs());
    Ok(AdaptiveResult {
        value,
        error_estimate: error,
        converged: converged && error <= target,
        evaluations,
    })
}

fn kronrod_panel<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    depth: u32,
    evaluations: &mut usize,
) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand { node: x, value: v })
        }
    };
    let f_center = eval(center)?;
    let mut kronrod = KRONROD_WEIGHTS[7] * f_center;
    let mut gauss = GAUSS_WEIGHTS[3] * f_center;
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += KRONROD_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    *evaluations += 15;
    Ok(Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        depth,
    })
}
