//! Laplacian eigendecomposition, graph Fourier transform and spectral
//! summaries of graph signals.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Matrices up to this size go through cyclic Jacobi; larger ones through
/// Householder tridiagonalisation and implicit QL.
pub const JACOBI_MAX_N: usize = 128;
const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITER: usize = 60;

/// Eigenvalues in ascending order and orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(i)
    }
}

fn check_symmetric(a: &Array2<f64>) -> Result<usize> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch { expected: n, got: m });
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(n)
}

/// Eigendecomposition of a real symmetric matrix.
pub fn eig_sym(a: &Array2<f64>) -> Result<Spectrum> {
    if a.nrows() <= JACOBI_MAX_N {
        eig_sym_jacobi(a)
    } else {
        eig_sym_tridiagonal(a)
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `1e-12 · max(1, ‖A‖_F)`.
pub fn eig_sym_jacobi(a: &Array2<f64>) -> Result<Spectrum> {
    let n = check_symmetric(a)?;
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = JACOBI_TOL * fro.max(1.0);
    let off = |m: &Array2<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * m[[i, j]] * m[[i, j]];
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    Ok(finish(values, v))
}

/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson-style shifts (the classic tred2/tql2 pair).
pub fn eig_sym_tridiagonal(a: &Array2<f64>) -> Result<Spectrum> {
    let n = check_symmetric(a)?;
    if n == 0 {
        return Ok(finish(Vec::new(), Array2::zeros((0, 0))));
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // QL rotates pairs of columns; work on the transpose so they are contiguous
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    tql2(&mut w, &mut d, &mut e)?;
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| w[j][i]);
    Ok(finish(d, vecs))
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);
            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let g: f64 = (0..=i).map(|k| v[k][i + 1] * v[k][j]).sum();
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// `w` holds eigenvector candidates as rows.
fn tql2(w: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::NoConvergence(QL_MAX_ITER));
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
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut(i + 1);
                    let (wi, wi1) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in wi.iter_mut().zip(wi1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Sorts ascending and fixes signs: the largest-magnitude entry of each
/// eigenvector is positive, ties going to the lowest index.
fn finish(values: Vec<f64>, vectors: Array2<f64>) -> Spectrum {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col
            .iter()
            .position(|x| x.abs() >= max - 1e-12)
            .unwrap_or(0);
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.column_mut(dst).assign(&(&col * sign));
    }
    Spectrum { eigenvalues, eigenvectors }
}

/// Graph Fourier transform `x̂ = Uᵀx`.
pub fn gft(s: &Spectrum, x: &[f64]) -> Result<Array1<f64>> {
    if x.len() != s.n() {
        return Err(Error::DimensionMismatch { expected: s.n(), got: x.len() });
    }
    Ok(s.eigenvectors.t().dot(&ArrayView1::from(x)))
}

pub fn inverse_gft(s: &Spectrum, xhat: &[f64]) -> Result<Array1<f64>> {
    if xhat.len() != s.n() {
        return Err(Error::DimensionMismatch { expected: s.n(), got: xhat.len() });
    }
    Ok(s.eigenvectors.dot(&ArrayView1::from(xhat)))
}

/// `xᵀ L x` evaluated as the edge sum `Σ (x_i − x_j)²`.
pub fn total_variation(g: &Graph, x: &[f64]) -> Result<f64> {
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: x.len() });
    }
    Ok(g.edges().iter().map(|&(u, v)| (x[u] - x[v]).powi(2)).sum())
}

/// `xᵀ L x` through the dense Laplacian.
pub fn quadratic_form(l: &Array2<f64>, x: &[f64]) -> Result<f64> {
    if x.len() != l.nrows() {
        return Err(Error::DimensionMismatch { expected: l.nrows(), got: x.len() });
    }
    let x = ArrayView1::from(x);
    Ok(x.dot(&l.dot(&x)))
}

/// Fraction of spectral energy in frequencies with 1-based index `> cut·n`.
pub fn high_freq_fraction(xhat: &[f64], cut: f64) -> Result<f64> {
    let total: f64 = xhat.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    let threshold = cut * xhat.len() as f64;
    let high: f64 = xhat
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) as f64 > threshold)
        .map(|(_, v)| v * v)
        .sum();
    Ok(high / total)
}

/// Mean-centres and ℓ₂-normalises a signal.
pub fn normalize_signal(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::ZeroVector);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(centred.into_iter().map(|v| v / norm).collect())
}

/// A random step signal drawn i.i.d. from the empirical distribution of `labels`.
pub fn matched_random_signal(labels: &[usize], seed: u64) -> Vec<usize> {
    let mut rng = rng::seeded(seed);
    (0..labels.len())
        .map(|_| labels[rng.random_range(0..labels.len())])
        .collect()
}

/// CSV with header `index,eigenvalue,coefficient` (1-based index).
pub fn spectrum_csv(s: &Spectrum, xhat: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue,coefficient\n");
    for (i, (lambda, c)) in s.eigenvalues.iter().zip(xhat).enumerate() {
        let _ = writeln!(out, "{},{:.12e},{:.12e}", i + 1, lambda, c);
    }
    out
}

pub fn write_spectrum_csv(path: impl AsRef<Path>, s: &Spectrum, xhat: &[f64]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, spectrum_csv(s, xhat)).map_err(|e| Error::io(path, e))
}
