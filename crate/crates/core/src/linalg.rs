//! Dense and tridiagonal symmetric eigensolvers.
//!
//! The QL iteration is shared by the Gauss–Laguerre construction (which only
//! needs the first row of the eigenvector matrix) and the full dense
//! decomposition of the port correlation matrix. Matrices are column-major.

use crate::error::{Error, Result};

/// Maximum QL sweeps spent on a single eigenvalue.
pub(crate) const QL_MAX_SWEEPS: usize = 50;

/// Receives the plane rotations applied by the QL iteration.
pub(crate) trait RotationSink {
    /// Replace columns `(i, i + 1)` by `(c x_i - s x_{i+1}, s x_i + c x_{i+1})`.
    fn rotate(&mut self, i: usize, c: f64, s: f64);
    fn swap(&mut self, i: usize, j: usize);
}

/// Tracks only the first row of the eigenvector matrix.
pub(crate) struct FirstRow(pub Vec<f64>);

impl RotationSink for FirstRow {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        let h = self.0[i + 1];
        self.0[i + 1] = s * self.0[i] + c * h;
        self.0[i] = c * self.0[i] - s * h;
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.0.swap(i, j);
    }
}

/// Square column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ColMajor {
    pub n: usize,
    pub data: Vec<f64>,
}

impl ColMajor {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n + row]
    }

    #[inline]
    fn at(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.data[col * self.n + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.n..(col + 1) * self.n]
    }

    fn two_columns(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let n = self.n;
        let (left, right) = self.data.split_at_mut((i + 1) * n);
        (&mut left[i * n..], &mut right[..n])
    }
}

impl RotationSink for ColMajor {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        let (xi, xj) = self.two_columns(i);
        for (a, b) in xi.iter_mut().zip(xj.iter_mut()) {
            let h = *b;
            *b = s * *a + c * h;
            *a = c * *a - s * h;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let n = self.n;
        let (left, right) = self.data.split_at_mut(hi * n);
        left[lo * n..(lo + 1) * n].swap_with_slice(&mut right[..n]);
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// `diag` (length n) is overwritten by the eigenvalues in ascending order.
/// `off` holds the n - 1 off-diagonal entries. Every rotation and the final
/// sorting permutation are forwarded to `sink`, so a sink initialised to the
/// identity ends up holding the eigenvectors as columns.
pub(crate) fn tridiagonal_ql<S: RotationSink>(
    diag: &mut [f64],
    off: &[f64],
    sink: &mut S,
) -> Result<()> {
    let n = diag.len();
    if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
        return Err(Error::parameter(
            "offdiagonal",
            format!("expected {} entries, got {}", n.saturating_sub(1), off.len()),
        ));
    }
    if diag.iter().chain(off).any(|v| !v.is_finite()) {
        return Err(Error::domain("tridiag_eigen", "matrix entries must be finite"));
    }
    let mut e = vec![0.0; n];
    e[..off.len()].copy_from_slice(off);
    let d = diag;

    let mut shift_total = 0.0;
    let mut scale = 0.0_f64;
    for l in 0..n {
        scale = scale.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= f64::EPSILON * scale {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return Err(Error::convergence(
                        "tridiag_eigen",
                        format!("eigenvalue {l} not isolated after {QL_MAX_SWEEPS} sweeps"),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for v in d.iter_mut().skip(l + 2) {
                    *v -= h;
                }
                shift_total += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    sink.rotate(i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * scale {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }

    // Selection sort keeps the permutation explicit for the sink.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            sink.swap(i, k);
        }
    }
    Ok(())
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
///
/// On return `q` holds the accumulated orthogonal transform and the result is
/// `(diagonal, offdiagonal)` of `q^T a q`.
fn householder_tridiagonalize(a: &ColMajor) -> (ColMajor, Vec<f64>, Vec<f64>) {
    let n = a.n;
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                *v.at(i, j) = 0.0;
                *v.at(j, i) = 0.0;
            }
        } else {
            for x in d[..i].iter_mut() {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e[..i].iter_mut() {
                *x = 0.0;
            }
            for j in 0..i {
                f = d[j];
                *v.at(j, i) = f;
                g = e[j] + v.get(j, j) * f;
                let col = v.column(j);
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let n_ = v.n;
                let col = &mut v.data[j * n_..(j + 1) * n_];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v.get(i - 1, j);
                *v.at(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        let diag_val = v.get(i, i);
        *v.at(n - 1, i) = diag_val;
        *v.at(i, i) = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                let n_ = v.n;
                let col = &mut v.data[j * n_..(j + 1) * n_];
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            *v.at(k, i + 1) = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        *v.at(n - 1, j) = 0.0;
    }
    if n > 0 {
        *v.at(n - 1, n - 1) = 1.0;
    }
    // e[i] is the coupling between rows i - 1 and i.
    let off = if n > 1 { e[1..].to_vec() } else { Vec::new() };
    (v, d, off)
}

/// Full eigen-decomposition of a dense symmetric matrix.
///
/// Returns eigenvalues ascending and the eigenvectors as the columns of a
/// column-major matrix, in the same order.
pub(crate) fn symmetric_eigen(a: &ColMajor) -> Result<(Vec<f64>, ColMajor)> {
    let (mut q, mut diag, off) = householder_tridiagonalize(a);
    tridiagonal_ql(&mut diag, &off, &mut q)?;
    Ok((diag, q))
}

/// Dominant Ritz values of a symmetric operator.
#[derive(Debug, Clone)]
pub(crate) struct RitzSpectrum {
    /// Ritz values, descending.
    pub values: Vec<f64>,
    /// Residual norm bound of each Ritz pair, aligned with `values`.
    pub residuals: Vec<f64>,
    /// Krylov dimension reached.
    pub dimension: usize,
    /// Set when the Krylov space became invariant.
    pub exhausted: bool,
}

/// Lanczos iteration with full reorthogonalisation.
///
/// `matvec(x, y)` must write `A x` into `y`. The starting vector is a fixed
/// pseudo-random sequence so results are reproducible and no eigenvector is
/// orthogonal to the start by symmetry.
pub(crate) struct Lanczos<F> {
    n: usize,
    matvec: F,
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pending: Option<Vec<f64>>,
    exhausted: bool,
}

impl<F: Fn(&[f64], &mut [f64])> Lanczos<F> {
    pub fn new(n: usize, matvec: F) -> Self {
        let mut state = 0x9E37_79B9_7F4A_7C15_u64;
        let mut start: Vec<f64> = (0..n)
            .map(|_| {
                // splitmix64 mapped to (-1, 1)
                state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^= z >> 31;
                (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
            })
            .collect();
        let norm = start.iter().map(|x| x * x).sum::<f64>().sqrt();
        start.iter_mut().for_each(|x| *x /= norm);
        Self {
            n,
            matvec,
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            pending: Some(start),
            exhausted: false,
        }
    }

    /// Grows the Krylov space to `dimension` (or until it is invariant).
    pub fn extend_to(&mut self, dimension: usize) {
        let dimension = dimension.min(self.n);
        let mut w = vec![0.0; self.n];
        while self.basis.len() < dimension && !self.exhausted {
            let v = self.pending.take().expect("pending Lanczos vector");
            (self.matvec)(&v, &mut w);
            let a: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
            self.alpha.push(a);
            self.basis.push(v);
            // Two passes of classical Gram–Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &self.basis {
                    let proj: f64 = q.iter().zip(&w).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(q).for_each(|(y, x)| *y -= proj * x);
                }
            }
            let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = self.alpha.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
            if b <= 1e-13 * scale || self.basis.len() == self.n {
                self.exhausted = true;
                self.beta.push(0.0);
            } else {
                self.beta.push(b);
                self.pending = Some(w.iter().map(|x| x / b).collect());
            }
        }
    }

    /// Ritz values of the current Krylov space, descending.
    pub fn ritz(&self) -> Result<RitzSpectrum> {
        let m = self.alpha.len();
        let mut values = self.alpha.clone();
        let mut sink = LastRow(vec![0.0; m]);
        if m > 0 {
            sink.0[m - 1] = 1.0;
        }
        tridiagonal_ql(&mut values, &self.beta[..m.saturating_sub(1)], &mut sink)?;
        let last_beta = self.beta.last().copied().unwrap_or(0.0);
        let mut residuals: Vec<f64> = sink.0.iter().map(|y| (last_beta * y).abs()).collect();
        values.reverse();
        residuals.reverse();
        Ok(RitzSpectrum {
            values,
            residuals,
            dimension: m,
            exhausted: self.exhausted,
        })
    }
}

/// Tracks the last row of the eigenvector matrix of the Lanczos tridiagonal.
struct LastRow(Vec<f64>);

impl RotationSink for LastRow {
    fn rotate(&mut self, i: usize, c: f64, s: f64) {
        let h = self.0[i + 1];
        self.0[i + 1] = s * self.0[i] + c * h;
        self.0[i] = c * self.0[i] - s * h;
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.0.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> ColMajor {
        let n = rows.len();
        let mut m = ColMajor::identity(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                *m.at(i, j) = x;
            }
        }
        m
    }

    #[test]
    fn dense_eigen_reconstructs() {
        let a = from_rows(&[
            &[4.0, 1.0, -2.0, 2.0],
            &[1.0, 2.0, 0.0, 1.0],
            &[-2.0, 0.0, 3.0, -2.0],
            &[2.0, 1.0, -2.0, -1.0],
        ]);
        let (vals, q) = symmetric_eigen(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..4 {
            for j in 0..4 {
                let rebuilt: f64 = (0..4).map(|k| q.get(i, k) * vals[k] * q.get(j, k)).sum();
                assert!((rebuilt - a.get(i, j)).abs() < 1e-12);
                let gram: f64 = (0..4).map(|k| q.get(k, i) * q.get(k, j)).sum();
                assert!((gram - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_finds_extreme_eigenvalues() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64).powi(2)).collect();
        let mut lanczos = Lanczos::new(n, |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = diag[i] * x[i];
            }
        });
        lanczos.extend_to(30);
        let ritz = lanczos.ritz().unwrap();
        for k in 0..3 {
            assert!((ritz.values[k] - diag[k]).abs() < 1e-10, "{:?}", ritz.values);
            assert!(ritz.residuals[k] < 1e-8);
        }
    }
}
