//! Spatial correlation of a linear port array: the exact sinc Toeplitz matrix,
//! its eigen-factor for channel synthesis, and the fitted block model.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, ColMajor, Lanczos};
use crate::streams;

/// Eigenvalues below this fraction of the largest are treated as exact zeros.
pub const EIGEN_CLIP_RATIO: f64 = 1e-12;

/// Correlation shared by all ports of a block unless the caller overrides it.
pub const DEFAULT_MU2: f64 = 0.97;

/// Largest matrix handled by dense decomposition during block fitting; larger
/// ones go through Lanczos.
const DENSE_FIT_LIMIT: usize = 400;

/// Scalar parameters of a multi-user fluid antenna downlink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Number of selectable ports.
    pub ports: usize,
    /// Aperture length in wavelengths.
    pub antenna_length: f64,
    pub users: usize,
    /// Channel uses per codeword.
    pub blocklength: usize,
    /// Average power of each port's channel coefficient.
    pub channel_variance: f64,
    pub noise_variance: f64,
    /// SINR threshold defining outage.
    pub outage_threshold: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            ports: 10,
            antenna_length: 0.5,
            users: 10,
            blocklength: 5,
            channel_variance: 2.0,
            noise_variance: 0.02,
            outage_threshold: 1e-3,
        }
    }
}

impl SystemConfig {
    /// Checks every structural constraint.
    ///
    /// A single port is accepted: it is the independent-fading special case
    /// used by the simulators, even though it has no port spacing.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::parameter(name, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.ports == 0 {
            return Err(Error::parameter("ports", "must be >= 1"));
        }
        if self.users == 0 {
            return Err(Error::parameter("users", "must be >= 1"));
        }
        if self.blocklength == 0 {
            return Err(Error::parameter("blocklength", "must be >= 1"));
        }
        positive("antenna_length", self.antenna_length)?;
        positive("channel_variance", self.channel_variance)?;
        positive("noise_variance", self.noise_variance)?;
        positive("outage_threshold", self.outage_threshold)
    }

    /// Codeword symbol variance, the reciprocal of the blocklength.
    pub fn codeword_variance(&self) -> f64 {
        1.0 / self.blocklength as f64
    }

    /// Linear signal-to-noise ratio.
    pub fn snr(&self) -> f64 {
        self.channel_variance / self.noise_variance
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// Sets the noise variance so that the SNR equals `snr_db`, keeping the
    /// channel variance fixed.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_variance = self.channel_variance / 10f64.powf(snr_db / 10.0);
        self
    }
}

/// Symmetric Toeplitz correlation matrix described by its first row.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCorrelation {
    first_row: Vec<f64>,
}

impl ToeplitzCorrelation {
    /// Validates a unit-diagonal first row with entries in `[-1, 1]`.
    pub fn from_first_row(first_row: Vec<f64>) -> Result<Self> {
        match first_row.first() {
            None => return Err(Error::parameter("first_row", "must not be empty")),
            Some(&d) if d != 1.0 => {
                return Err(Error::parameter("first_row", format!("diagonal must be 1, got {d}")))
            }
            _ => {}
        }
        if let Some(bad) = first_row.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::parameter(
                "first_row",
                format!("entries must lie in [-1, 1], got {bad}"),
            ));
        }
        Ok(Self { first_row })
    }

    /// Uncorrelated ports.
    pub fn identity(size: usize) -> Result<Self> {
        let mut row = vec![0.0; size];
        if let Some(first) = row.first_mut() {
            *first = 1.0;
        }
        Self::from_first_row(row)
    }

    pub fn size(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.first_row[row.abs_diff(col)]
    }

    pub fn trace(&self) -> f64 {
        self.size() as f64
    }

    /// `y = Sigma x` in `O(N^2)` without forming the matrix.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.size();
        let a = &self.first_row;
        for i in 0..n {
            let below: f64 = x[..i].iter().rev().zip(&a[1..=i]).map(|(u, v)| u * v).sum();
            let above: f64 = x[i..].iter().zip(a).map(|(u, v)| u * v).sum();
            y[i] = below + above;
        }
    }

    pub(crate) fn to_dense(&self) -> ColMajor {
        let n = self.size();
        let mut m = ColMajor::identity(n);
        for col in 0..n {
            for row in 0..n {
                m.data[col * n + row] = self.get(row, col);
            }
        }
        m
    }

    /// Plain-text form: `key = value` header lines followed by the full matrix
    /// as comma-separated rows, every number with 17 significant digits.
    pub fn to_text(&self) -> String {
        let n = self.size();
        let mut out = String::new();
        let _ = writeln!(out, "format = fblfas-correlation");
        let _ = writeln!(out, "version = 1");
        let _ = writeln!(out, "size = {n}");
        let _ = writeln!(out, "matrix:");
        for row in 0..n {
            let line: Vec<String> = (0..n).map(|col| format_float(self.get(row, col))).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Parses [`ToeplitzCorrelation::to_text`] output, checking that the
    /// matrix is symmetric Toeplitz.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = read_header(&mut lines, "fblfas-correlation", &["size"], Some("matrix:"))?;
        let size: usize = parse_value(&header, "size")?;
        let mut rows = Vec::with_capacity(size);
        for _ in 0..size {
            let (no, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                detail: format!("expected {size} matrix rows"),
            })?;
            let row: Vec<f64> = line
                .split(',')
                .map(|v| parse_float(v, no + 1))
                .collect::<Result<_>>()?;
            if row.len() != size {
                return Err(Error::Parse {
                    line: no + 1,
                    detail: format!("expected {size} columns, got {}", row.len()),
                });
            }
            rows.push(row);
        }
        if let Some((no, _)) = lines.next() {
            return Err(Error::Parse {
                line: no + 1,
                detail: "trailing content after matrix".into(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != rows[0][i.abs_diff(j)] {
                    return Err(Error::Parse {
                        line: 0,
                        detail: format!("entry ({i}, {j}) breaks symmetric Toeplitz structure"),
                    });
                }
            }
        }
        let first_row = rows.into_iter().next().unwrap_or_default();
        Self::from_first_row(first_row)
    }
}

/// Sinc correlation of `ports` equally spaced ports over `antenna_length`
/// wavelengths: entry `n` is `sin(z) / z` with `z = 2 pi n W / (N - 1)`.
pub fn build_correlation(ports: usize, antenna_length: f64) -> Result<ToeplitzCorrelation> {
    if ports < 2 {
        return Err(Error::parameter("ports", format!("must be >= 2, got {ports}")));
    }
    if !(antenna_length.is_finite() && antenna_length > 0.0) {
        return Err(Error::parameter(
            "antenna_length",
            format!("must be finite and > 0, got {antenna_length}"),
        ));
    }
    let spacing = antenna_length / (ports - 1) as f64;
    let first_row = (0..ports)
        .map(|n| {
            if n == 0 {
                1.0
            } else {
                let z = 2.0 * std::f64::consts::PI * n as f64 * spacing;
                z.sin() / z
            }
        })
        .collect();
    ToeplitzCorrelation::from_first_row(first_row)
}

/// `Sigma = Q diag(lambda) Q^T` with clipped, descending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFactor {
    eigenvalues: Vec<f64>,
    vectors: ColMajor,
    clipped_mass: f64,
}

impl EigenFactor {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Non-negative eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unit eigenvector paired with `eigenvalues()[k]`.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        self.vectors.column(k)
    }

    /// Number of eigenvalues that survived clipping.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().take_while(|&&v| v > 0.0).count()
    }

    /// Sum of the absolute values of the eigenvalues that were zeroed.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    /// Entry `(row, col)` of `Q diag(lambda) Q^T`.
    pub fn reconstruct(&self, row: usize, col: usize) -> f64 {
        (0..self.rank())
            .map(|k| self.vectors.get(row, k) * self.eigenvalues[k] * self.vectors.get(col, k))
            .sum()
    }
}

/// Full symmetric eigen-decomposition of the correlation matrix.
pub fn eigen_factor(corr: &ToeplitzCorrelation) -> Result<EigenFactor> {
    let (ascending, vectors) = symmetric_eigen(&corr.to_dense())?;
    let n = ascending.len();
    let largest = ascending.last().copied().unwrap_or(0.0).max(0.0);
    let floor = EIGEN_CLIP_RATIO * largest;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut ordered = ColMajor::identity(n);
    let mut clipped_mass = 0.0;
    for (dst, src) in (0..n).rev().enumerate() {
        let v = ascending[src];
        if v < floor {
            clipped_mass += v.abs();
            eigenvalues.push(0.0);
        } else {
            eigenvalues.push(v);
        }
        ordered.data[dst * n..(dst + 1) * n].copy_from_slice(vectors.column(src));
    }
    Ok(EigenFactor {
        eigenvalues,
        vectors: ordered,
        clipped_mass,
    })
}

/// Pre-scaled columns `sqrt(lambda_k sigma^2 / 2) q_k` for the non-zero modes.
pub(crate) struct ChannelSampler {
    ports: usize,
    /// Row-major `rank x ports`.
    modes: Vec<f64>,
    rank: usize,
}

impl ChannelSampler {
    pub fn new(factor: &EigenFactor, channel_variance: f64) -> Result<Self> {
        if !(channel_variance.is_finite() && channel_variance > 0.0) {
            return Err(Error::parameter(
                "channel_variance",
                format!("must be finite and > 0, got {channel_variance}"),
            ));
        }
        let rank = factor.rank();
        let ports = factor.size();
        let mut modes = Vec::with_capacity(rank * ports);
        for k in 0..rank {
            let amplitude = (0.5 * factor.eigenvalues[k] * channel_variance).sqrt();
            modes.extend(factor.eigenvector(k).iter().map(|q| amplitude * q));
        }
        Ok(Self { ports, modes, rank })
    }

    /// Independent ports with the given variance.
    pub fn independent(ports: usize, channel_variance: f64) -> Result<Self> {
        let identity = EigenFactor {
            eigenvalues: vec![1.0; ports],
            vectors: ColMajor::identity(ports),
            clipped_mass: 0.0,
        };
        Self::new(&identity, channel_variance)
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Writes one channel realisation into `re` and `im`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, re: &mut [f64], im: &mut [f64]) {
        re.fill(0.0);
        im.fill(0.0);
        for k in 0..self.rank {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let mode = &self.modes[k * self.ports..(k + 1) * self.ports];
            for ((r, i), m) in re.iter_mut().zip(im.iter_mut()).zip(mode) {
                *r += m * x;
                *i += m * y;
            }
        }
    }

    /// Largest per-port power `max_k |g_k|^2` of one realisation.
    pub fn draw_max_gain<R: Rng + ?Sized>(&self, rng: &mut R, re: &mut [f64], im: &mut [f64]) -> f64 {
        self.draw(rng, re, im);
        re.iter()
            .zip(im.iter())
            .map(|(r, i)| r * r + i * i)
            .fold(0.0, f64::max)
    }
}

/// `count` independent channel vectors `Q diag(lambda)^(1/2) g0`, where `g0`
/// has i.i.d. circularly-symmetric complex Gaussian entries of variance
/// `channel_variance`. Output depends only on the arguments, not on the
/// number of worker threads.
pub fn sample_channels(
    factor: &EigenFactor,
    channel_variance: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    if count == 0 {
        return Err(Error::parameter("count", "must be >= 1"));
    }
    let sampler = ChannelSampler::new(factor, channel_variance)?;
    let n = sampler.ports();
    let chunks = streams::map_chunks(count, seed, |rng, len| {
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        (0..len)
            .map(|_| {
                sampler.draw(rng, &mut re, &mut im);
                re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect()
            })
            .collect::<Vec<Vec<Complex64>>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Block-diagonal approximation: `B` blocks of fully shared correlation `mu2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    sizes: Vec<usize>,
    mu2: f64,
}

impl BlockModel {
    pub fn new(sizes: Vec<usize>, mu2: f64) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::parameter("block_sizes", "need at least one block, each >= 1"));
        }
        if !(mu2 > 0.0 && mu2 < 1.0) {
            return Err(Error::parameter("mu2", format!("must lie in (0, 1), got {mu2}")));
        }
        Ok(Self { sizes, mu2 })
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    /// Total number of ports covered by the blocks.
    pub fn ports(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn to_text(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        format!(
            "format = fblfas-block-model\nversion = 1\nmu2 = {}\nblock_sizes = {}\n",
            format_float(self.mu2),
            sizes.join(",")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = read_header(&mut lines, "fblfas-block-model", &["mu2", "block_sizes"], None)?;
        let mu2: f64 = parse_value(&header, "mu2")?;
        let (no, raw) = header
            .iter()
            .find(|(_, k, _)| k == "block_sizes")
            .map(|(no, _, v)| (*no, v.clone()))
            .expect("required key checked by read_header");
        let sizes = raw
            .split(',')
            .map(|s| {
                s.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: no,
                    detail: format!("bad block size `{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes, mu2)
    }
}

/// Knobs of the eigenvalue-driven block fitting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockFitOptions {
    /// Eigenvalues below this fraction of the largest never open a block.
    pub significance: f64,
    /// Fraction of the trace the retained eigenvalues must reach.
    pub energy: f64,
    /// Block sizes are proportional to `lambda_b ^ size_exponent`.
    pub size_exponent: f64,
}

impl Default for BlockFitOptions {
    fn default() -> Self {
        Self {
            significance: 1e-2,
            energy: 0.95,
            size_exponent: 2.0,
        }
    }
}

impl BlockFitOptions {
    fn validate(&self) -> Result<()> {
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::parameter("significance", "must lie in (0, 1)"));
        }
        if !(self.energy > 0.0 && self.energy <= 1.0) {
            return Err(Error::parameter("energy", "must lie in (0, 1]"));
        }
        if !(self.size_exponent.is_finite() && self.size_exponent >= 0.0) {
            return Err(Error::parameter("size_exponent", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A fitted block model and the spectrum it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFit {
    pub model: BlockModel,
    /// Leading eigenvalues of the correlation matrix, descending.
    pub leading_eigenvalues: Vec<f64>,
    /// Set when the spectrum offered no usable block and one block was used.
    pub warning: Option<String>,
}

/// Fits a block model with [`BlockFitOptions::default`].
pub fn fit_block_model(corr: &ToeplitzCorrelation, mu2: f64) -> Result<BlockFit> {
    fit_block_model_with(corr, mu2, &BlockFitOptions::default())
}

/// Fits a block model to the spectrum of `corr`.
///
/// The block count is the smallest `k` whose leading eigenvalues reach
/// `energy` of the trace, capped by the number of eigenvalues at or above
/// `significance * lambda_max` and extended across numerically equal
/// eigenvalues. Sizes follow `lambda_b ^ size_exponent` under largest-remainder
/// rounding, sum to the port count exactly, and are all at least one.
pub fn fit_block_model_with(
    corr: &ToeplitzCorrelation,
    mu2: f64,
    options: &BlockFitOptions,
) -> Result<BlockFit> {
    options.validate()?;
    if !(mu2 > 0.0 && mu2 < 1.0) {
        return Err(Error::parameter("mu2", format!("must lie in (0, 1), got {mu2}")));
    }
    let n = corr.size();
    let leading = leading_spectrum(corr, options)?;
    let count = match select_block_count(&leading, corr.trace(), n, options) {
        Selection::Final(k) | Selection::NeedMore(k) => k,
    };
    if count == 0 || !leading[0].is_finite() || leading[0] <= 0.0 {
        return Ok(BlockFit {
            model: BlockModel::new(vec![n], mu2)?,
            leading_eigenvalues: leading,
            warning: Some("spectrum has no significant eigenvalue; using a single block".into()),
        });
    }
    let shares: Vec<f64> = leading[..count]
        .iter()
        .map(|v| v.max(0.0).powf(options.size_exponent))
        .collect();
    let sizes = largest_remainder(&shares, n);
    Ok(BlockFit {
        model: BlockModel::new(sizes, mu2)?,
        leading_eigenvalues: leading,
        warning: None,
    })
}

enum Selection {
    /// The block count is settled by the values seen so far.
    Final(usize),
    /// More eigenvalues are needed; the payload is the provisional count.
    NeedMore(usize),
}

/// Applies the fitting rule to a descending prefix of the spectrum.
fn select_block_count(prefix: &[f64], trace: f64, n: usize, options: &BlockFitOptions) -> Selection {
    let complete = prefix.len() == n;
    let Some(&largest) = prefix.first() else {
        return if complete {
            Selection::Final(0)
        } else {
            Selection::NeedMore(0)
        };
    };
    let floor = options.significance * largest;
    let mut cumulative = 0.0;
    let mut count = None;
    for (k, &v) in prefix.iter().enumerate() {
        if v < floor {
            count = Some(k);
            break;
        }
        cumulative += v;
        if cumulative >= options.energy * trace {
            count = Some(k + 1);
            break;
        }
    }
    let Some(mut count) = count else {
        return if complete {
            Selection::Final(prefix.len())
        } else {
            Selection::NeedMore(prefix.len())
        };
    };
    while count < prefix.len() && prefix[count] >= (1.0 - 1e-9) * prefix[count - 1] {
        count += 1;
    }
    if count < prefix.len() || complete {
        Selection::Final(count)
    } else {
        Selection::NeedMore(count)
    }
}

/// Enough leading eigenvalues (descending) to settle the block count.
fn leading_spectrum(corr: &ToeplitzCorrelation, options: &BlockFitOptions) -> Result<Vec<f64>> {
    let n = corr.size();
    if n <= DENSE_FIT_LIMIT {
        let (mut values, _) = symmetric_eigen(&corr.to_dense())?;
        values.reverse();
        return Ok(values);
    }
    let mut lanczos = Lanczos::new(n, |x: &[f64], y: &mut [f64]| corr.apply(x, y));
    let mut dimension = 48.min(n);
    loop {
        lanczos.extend_to(dimension);
        let ritz = lanczos.ritz()?;
        if ritz.exhausted && ritz.dimension < n {
            // An invariant Krylov space holds every eigenvalue the start vector
            // excites. When those already carry the trace, the rest of the
            // spectrum is numerically zero; otherwise a degenerate eigenvalue
            // was missed and only the dense solver can recover it.
            let missing = corr.trace() - ritz.values.iter().sum::<f64>();
            if missing.abs() <= 1e-9 * corr.trace() {
                let mut values = ritz.values;
                values.resize(n, 0.0);
                return Ok(values);
            }
            let (mut values, _) = symmetric_eigen(&corr.to_dense())?;
            values.reverse();
            return Ok(values);
        }
        let largest = ritz.values[0];
        let converged: Vec<f64> = ritz
            .values
            .iter()
            .zip(&ritz.residuals)
            .take_while(|(_, r)| **r <= 1e-9 * largest)
            .map(|(v, _)| *v)
            .collect();
        let settled = matches!(
            select_block_count(&converged, corr.trace(), n, options),
            Selection::Final(_)
        );
        if settled || ritz.dimension >= n {
            return Ok(if settled { converged } else { ritz.values });
        }
        dimension = (2 * dimension).min(n);
    }
}

/// Splits `total` into integer parts proportional to `shares`, each >= 1.
fn largest_remainder(shares: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    let count = shares.len();
    let quotas: Vec<f64> = if sum > 0.0 {
        shares.iter().map(|s| s / sum * total as f64).collect()
    } else {
        vec![total as f64 / count as f64; count]
    };
    let mut sizes: Vec<usize> = quotas.iter().map(|q| (q.floor() as usize).max(1)).collect();
    let remainder = |i: usize| quotas[i] - quotas[i].floor();
    let mut order: Vec<usize> = (0..count).collect();
    // Largest remainder first; ties broken by block index for determinism.
    order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));
    let mut assigned: usize = sizes.iter().sum();
    let mut cursor = 0;
    while assigned < total {
        sizes[order[cursor % count]] += 1;
        assigned += 1;
        cursor += 1;
    }
    // Minimum-size bumps can overshoot; take back from the smallest remainders
    // among blocks that can spare a port.
    let mut cursor = count;
    while assigned > total {
        cursor = if cursor == 0 { count } else { cursor };
        cursor -= 1;
        let i = order[cursor];
        if sizes[i] > 1 {
            sizes[i] -= 1;
            assigned -= 1;
        }
    }
    sizes
}

/// 17 significant digits: enough to round-trip any `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        detail: format!("bad number `{}`: {e}", s.trim()),
    })
}

type Header = Vec<(usize, String, String)>;

/// Reads `key = value` lines up to an optional terminator line.
fn read_header<'a, I>(
    lines: &mut I,
    format: &str,
    required: &[&str],
    terminator: Option<&str>,
) -> Result<Header>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut header = Header::new();
    let mut terminated = terminator.is_none();
    for (no, line) in lines.by_ref() {
        let line = line.trim();
        if Some(line) == terminator {
            terminated = true;
            break;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: no + 1,
            detail: format!("expected `key = value`, got `{line}`"),
        })?;
        header.push((no + 1, key.trim().to_string(), value.trim().to_string()));
    }
    if !terminated {
        return Err(Error::Parse {
            line: 0,
            detail: format!("missing `{}` line", terminator.unwrap_or_default()),
        });
    }
    match header.iter().find(|(_, k, _)| k == "format") {
        Some((_, _, v)) if v == format => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected `format = {format}`"),
            })
        }
    }
    match header.iter().find(|(_, k, _)| k == "version") {
        Some((_, _, v)) if v == "1" => {}
        _ => {
            return Err(Error::Parse {
                line: 2,
                detail: "unsupported or missing version".into(),
            })
        }
    }
    for key in required {
        if !header.iter().any(|(_, k, _)| k == key) {
            return Err(Error::Parse {
                line: 0,
                detail: format!("missing key `{key}`"),
            });
        }
    }
    Ok(header)
}

fn parse_value<T: std::str::FromStr>(header: &Header, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let (no, _, raw) = header
        .iter()
        .find(|(_, k, _)| k == key)
        .ok_or(Error::Parse {
            line: 0,
            detail: format!("missing key `{key}`"),
        })?;
    raw.parse().map_err(|e: T::Err| Error::Parse {
        line: *no,
        detail: format!("bad value for `{key}`: {e}"),
    })
}
