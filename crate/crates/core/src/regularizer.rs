//! Smoothness and non-uniformity losses on a matrix of class probabilities.
//!
//! For `X = softmax(O)` the loss is `L0 = L1 + L2` with the smoothness term
//! `L1 = Tr(XᵀLX)` and the non-uniformity term `L2 = Tr(XᵀDX)` for a
//! nonpositive diagonal `D`. With the default `D = I − D_G`,
//! `L0 = Tr(Xᵀ(I − A)X)`, which is indefinite and only bounded below because
//! the rows of `X` are probability vectors.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::Serialize;

use crate::dist::{half_l1, Marginals};
use crate::error::{Error, Result};
use crate::graph::Graph;

const ROW_TOL: f64 = 1e-7;

/// Thresholds swept by the non-uniformity report.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.005, 0.01, 0.02, 0.05];

/// Row-stochastic `n × m` matrix of class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix(Array2<f64>);

impl ProbMatrix {
    pub fn new(x: Array2<f64>) -> Result<Self> {
        for (i, row) in x.rows().into_iter().enumerate() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidDistribution(format!("row {i} has entries outside [0, 1]")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(x))
    }

    pub fn uniform(n: usize, m: usize) -> Self {
        Self(Array2::from_elem((n, m), 1.0 / m as f64))
    }

    pub fn one_hot(labels: &[usize], m: usize) -> Result<Self> {
        Ok(Self(Marginals::one_hot(labels, m)?.matrix().clone()))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn m(&self) -> usize {
        self.0.ncols()
    }

    /// Row-wise argmax; ties go to the lowest class index.
    pub fn argmax(&self) -> Vec<usize> {
        argmax_rows(self.0.view())
    }
}

pub fn argmax_rows(x: ArrayView2<'_, f64>) -> Vec<usize> {
    x.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect()
}

/// Diagonal weights `a_i ≤ 0` of the non-uniformity term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightDiag(Vec<f64>);

impl WeightDiag {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(**v <= 0.0)) {
            return Err(Error::Config(format!("weight a_{i} = {v} must be nonpositive")));
        }
        Ok(Self(a))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// `D = I − D_G`, i.e. `a_i = 1 − deg(i)`. Isolated nodes would get `+1`;
    /// they are clamped to 0.
    pub fn default_for(g: &Graph) -> Self {
        let isolated = (0..g.n()).filter(|&v| g.degree(v) == 0).count();
        if isolated > 0 {
            log::warn!("{isolated} isolated node(s): non-uniformity weight clamped to 0");
        }
        Self((0..g.n()).map(|v| (1.0 - g.degree(v) as f64).min(0.0)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(o: &Array2<f64>) -> Result<ProbMatrix> {
    if o.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("NaN logit".into()));
    }
    let mut x = o.clone();
    for mut row in x.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
    Ok(ProbMatrix(x))
}

/// Pulls a gradient with respect to `X = softmax(O)` back to `O`:
/// `∂/∂O_ij = X_ij (G_ij − Σ_k G_ik X_ik)`.
pub fn softmax_backward(x: &Array2<f64>, grad_x: &Array2<f64>) -> Array2<f64> {
    let dots = (x * grad_x).sum_axis(Axis(1));
    let mut out = grad_x.clone();
    for (mut row, d) in out.rows_mut().into_iter().zip(dots.iter()) {
        row -= *d;
    }
    out * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossParts {
    pub l1: f64,
    pub l2: f64,
    pub l0: f64,
}

fn check_dims(rows: usize, g: &Graph, d: Option<&WeightDiag>) -> Result<()> {
    if rows != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: rows });
    }
    if let Some(d) = d {
        if d.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: d.len() });
        }
    }
    Ok(())
}

/// `Tr(XᵀLX)` as the edge sum `Σ_(u,v) ‖x_u − x_v‖²`; any real matrix.
pub fn smoothness(g: &Graph, x: ArrayView2<'_, f64>) -> f64 {
    g.edges()
        .iter()
        .map(|&(u, v)| {
            x.row(u)
                .iter()
                .zip(x.row(v).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// `Tr(XᵀDX) = Σ a_i ‖x_i‖²`.
pub fn nonuniformity(d: &WeightDiag, x: ArrayView2<'_, f64>) -> f64 {
    d.0.iter()
        .zip(x.rows())
        .map(|(a, row)| a * row.dot(&row))
        .sum()
}

/// `Tr(Xᵀ(D_G − A + D)X)` expanded over nodes and adjacency, independently of
/// [`smoothness`] and [`nonuniformity`].
pub fn combined(g: &Graph, d: &WeightDiag, x: ArrayView2<'_, f64>) -> f64 {
    let diag: f64 = (0..g.n())
        .map(|i| (g.degree(i) as f64 + d.0[i]) * x.row(i).dot(&x.row(i)))
        .sum();
    let off: f64 = g.edges().iter().map(|&(u, v)| x.row(u).dot(&x.row(v))).sum();
    diag - 2.0 * off
}

/// `2LX`.
pub fn smoothness_grad(g: &Graph, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    for &(u, v) in g.edges() {
        let diff = &x.row(u) - &x.row(v);
        let mut ru = out.row_mut(u);
        ru.scaled_add(2.0, &diff);
        let mut rv = out.row_mut(v);
        rv.scaled_add(-2.0, &diff);
    }
    out
}

/// `2DX`.
pub fn nonuniformity_grad(d: &WeightDiag, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    for (mut row, a) in out.rows_mut().into_iter().zip(&d.0) {
        row *= 2.0 * a;
    }
    out
}

pub fn loss_components(x: &ProbMatrix, g: &Graph, d: &WeightDiag) -> Result<LossParts> {
    check_dims(x.n(), g, Some(d))?;
    let v = x.0.view();
    Ok(LossParts { l1: smoothness(g, v), l2: nonuniformity(d, v), l0: combined(g, d, v) })
}

/// Gradient of `L0` with respect to `X`: `2(D_G − A + D)X`.
pub fn grad_loss0(x: &ProbMatrix, g: &Graph, d: &WeightDiag) -> Result<Array2<f64>> {
    check_dims(x.n(), g, Some(d))?;
    let v = x.0.view();
    Ok(smoothness_grad(g, v) + nonuniformity_grad(d, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityBound {
    /// `Tr(XᵀDX)`.
    pub trace: f64,
    /// `C = −Tr(D)/m`.
    pub constant: f64,
    /// `Tr(XᵀDX) + C`.
    pub lhs: f64,
    /// `2 Σ a_i W(μ_i, U)²`.
    pub rhs: f64,
    /// `Tr(X_oᵀDX_o)` for one-hot rows.
    pub trace_one_hot: f64,
    /// `Tr(X_uᵀDX_u)` for uniform rows.
    pub trace_uniform: f64,
    pub holds: bool,
}

impl UniformityBound {
    pub fn inequality_margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn lower_margin(&self) -> f64 {
        self.trace - self.trace_one_hot
    }

    pub fn upper_margin(&self) -> f64 {
        self.trace_uniform - self.trace
    }
}

/// Evaluates both sides of the non-uniformity bound and the one-hot/uniform
/// sandwich of `Tr(XᵀDX)`.
pub fn uniformity_bound(x: &ProbMatrix, d: &WeightDiag) -> Result<UniformityBound> {
    if d.len() != x.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), got: d.len() });
    }
    let m = x.m() as f64;
    let uniform = vec![1.0 / m; x.m()];
    let trace = nonuniformity(d, x.0.view());
    let constant = -d.trace() / m;
    let rhs: f64 = d
        .0
        .iter()
        .zip(x.0.rows())
        .map(|(a, row)| 2.0 * a * half_l1(&row.to_vec(), &uniform))
        .sum();
    let trace_one_hot = d.trace();
    let trace_uniform = d.trace() / m;
    let tol = 1e-9;
    let lhs = trace + constant;
    Ok(UniformityBound {
        trace,
        constant,
        lhs,
        rhs,
        trace_one_hot,
        trace_uniform,
        holds: lhs - rhs >= -tol && trace - trace_one_hot >= -tol && trace_uniform - trace >= -tol,
    })
}

/// Entries within `eps1` of `1/m`, and entries in `[1 − eps2, 1]`.
pub fn nonuniformity_counts(x: &ProbMatrix, eps1: f64, eps2: f64) -> (usize, usize) {
    let center = 1.0 / x.m() as f64;
    let mut near_uniform = 0;
    let mut near_one = 0;
    Zip::from(&x.0).for_each(|&v| {
        if (v - center).abs() <= eps1 {
            near_uniform += 1;
        }
        if v >= 1.0 - eps2 {
            near_one += 1;
        }
    });
    (near_uniform, near_one)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonuniformityRow {
    pub epsilon: f64,
    pub kind: &'static str,
    pub count: usize,
}

/// Counts for each threshold, once as `near_uniform` (`ε1 = ε`) and once as
/// `near_one` (`ε2 = ε`).
pub fn nonuniformity_sweep(x: &ProbMatrix, epsilons: &[f64]) -> Vec<NonuniformityRow> {
    epsilons
        .iter()
        .flat_map(|&eps| {
            let (u, o) = nonuniformity_counts(x, eps, eps);
            [
                NonuniformityRow { epsilon: eps, kind: "near_uniform", count: u },
                NonuniformityRow { epsilon: eps, kind: "near_one", count: o },
            ]
        })
        .collect()
}

/// CSV with header `epsilon,kind,count,model_tag`.
pub fn nonuniformity_csv<'a>(
    sweeps: impl IntoIterator<Item = (&'a str, &'a [NonuniformityRow])>,
) -> String {
    let mut out = String::from("epsilon,kind,count,model_tag\n");
    for (tag, rows) in sweeps {
        for r in rows {
            let _ = writeln!(out, "{},{},{},{}", r.epsilon, r.kind, r.count, tag);
        }
    }
    out
}
