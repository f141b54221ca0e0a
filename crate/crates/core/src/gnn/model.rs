//! Two-layer GCN `O = Â·ReLU(Â·F·W1)·W2` with hand-written backprop.

use ndarray::{Array2, Zip};
use rand::Rng as _;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::regularizer::{softmax_rows, ProbMatrix};
use crate::rng::Rng;

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(a: &Array2<f64>) -> Self {
        let rows = a
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(j, &w)| (j, w)).collect())
            .collect();
        Self { ncols: a.ncols(), rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `self · m`.
    pub fn dot(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.len(), m.ncols()));
        for (mut dst, row) in out.rows_mut().into_iter().zip(&self.rows) {
            for &(j, w) in row {
                dst.scaled_add(w, &m.row(j));
            }
        }
        out
    }

    /// `selfᵀ · m`.
    pub fn t_dot(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.ncols, m.ncols()));
        for (row, src) in self.rows.iter().zip(m.rows()) {
            for &(j, w) in row {
                out.row_mut(j).scaled_add(w, &src);
            }
        }
        out
    }

    /// Inverted dropout on the stored entries; zeros stay zero.
    fn dropout(&self, rate: f64, rng: &mut Rng) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().filter(|_| rng.random::<f64>() >= rate).map(|&(j, w)| (j, w * keep)).collect())
            .collect();
        Self { ncols: self.ncols, rows }
    }
}

/// Sparse symmetric propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator(SparseRows);

impl Propagator {
    pub fn new(g: &Graph) -> Self {
        let scale: Vec<f64> = (0..g.n()).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();
        let rows = (0..g.n())
            .map(|v| {
                let mut r: Vec<(usize, f64)> = g
                    .neighbors(v)
                    .iter()
                    .map(|&u| (u, scale[u] * scale[v]))
                    .chain(std::iter::once((v, scale[v] * scale[v])))
                    .collect();
                r.sort_unstable_by_key(|&(u, _)| u);
                r
            })
            .collect();
        Self(SparseRows { ncols: g.n(), rows })
    }

    /// Wraps an explicit symmetric matrix; used for hand-built instances.
    pub fn from_dense(a: &Array2<f64>) -> Self {
        Self(SparseRows::from_dense(a))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, m: &Array2<f64>) -> Array2<f64> {
        self.0.dot(m)
    }
}

/// Model parameters `W1: f×h`, `W2: h×m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl GcnParams {
    /// Glorot-uniform initialisation.
    pub fn glorot(features: usize, hidden: usize, classes: usize, rng: &mut Rng) -> Self {
        let w1 = glorot(features, hidden, rng);
        let w2 = glorot(hidden, classes, rng);
        Self { w1, w2 }
    }

    pub fn zeros(features: usize, hidden: usize, classes: usize) -> Self {
        Self { w1: Array2::zeros((features, hidden)), w2: Array2::zeros((hidden, classes)) }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }
}

/// Dropout configuration for one forward pass.
pub enum Dropout<'a> {
    Off,
    On { rate: f64, rng: &'a mut Rng },
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut Rng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { 0.0 } else { keep })
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    input: SparseRows,
    hidden_pre: Array2<f64>,
    hidden: Array2<f64>,
    hidden_mask: Option<Array2<f64>>,
    pub logits: Array2<f64>,
    pub probs: ProbMatrix,
}

pub fn gcn_forward(
    params: &GcnParams,
    a_hat: &Propagator,
    features: &SparseRows,
    dropout: Dropout<'_>,
) -> Result<Forward> {
    let n = features.nrows();
    if a_hat.n() != n {
        return Err(Error::DimensionMismatch { expected: a_hat.n(), got: n });
    }
    if params.w1.nrows() != features.ncols() {
        return Err(Error::DimensionMismatch { expected: params.w1.nrows(), got: features.ncols() });
    }
    if params.w2.nrows() != params.w1.ncols() {
        return Err(Error::DimensionMismatch { expected: params.w1.ncols(), got: params.w2.nrows() });
    }
    let (input, hidden_rng) = match dropout {
        Dropout::Off => (features.clone(), None),
        Dropout::On { rate, rng } => (features.dropout(rate, rng), Some((rate, rng))),
    };
    let hidden_pre = a_hat.apply(&input.dot(&params.w1));
    let mut hidden = hidden_pre.mapv(|v| v.max(0.0));
    let hidden_mask = hidden_rng.map(|(rate, rng)| {
        let mask = dropout_mask(hidden.dim(), rate, rng);
        hidden *= &mask;
        mask
    });
    let logits = a_hat.apply(&hidden.dot(&params.w2));
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GCN logits".into()));
    }
    let probs = softmax_rows(&logits)?;
    Ok(Forward { input, hidden_pre, hidden, hidden_mask, logits, probs })
}

/// Gradients of the parameters given `∂loss/∂O`.
pub fn gcn_backward(
    params: &GcnParams,
    a_hat: &Propagator,
    fwd: &Forward,
    grad_logits: &Array2<f64>,
) -> GcnParams {
    let g_z2 = a_hat.apply(grad_logits);
    let w2 = fwd.hidden.t().dot(&g_z2);
    let mut g_hidden = g_z2.dot(&params.w2.t());
    if let Some(mask) = &fwd.hidden_mask {
        g_hidden *= mask;
    }
    Zip::from(&mut g_hidden).and(&fwd.hidden_pre).for_each(|g, &h| {
        if h <= 0.0 {
            *g = 0.0;
        }
    });
    let g_z1 = a_hat.apply(&g_hidden);
    let w1 = fwd.input.t_dot(&g_z1);
    GcnParams { w1, w2 }
}

/// Adam optimiser state.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: GcnParams,
    v: GcnParams,
}

impl Adam {
    pub fn new(params: &GcnParams, lr: f64) -> Self {
        let (f, h) = params.w1.dim();
        let m = params.w2.ncols();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: GcnParams::zeros(f, h, m),
            v: GcnParams::zeros(f, h, m),
        }
    }

    pub fn update(&mut self, params: &mut GcnParams, grad: &GcnParams) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let pairs = [
            (&mut params.w1, &grad.w1, &mut self.m.w1, &mut self.v.w1),
            (&mut params.w2, &grad.w2, &mut self.m.w2, &mut self.v.w2),
        ];
        for (p, g, m, v) in pairs {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn zero_weights_give_uniform_rows() {
        let g = Graph::path(4);
        let a = Propagator::new(&g);
        let f = Array2::from_elem((4, 3), 0.5);
        let fwd = gcn_forward(&GcnParams::zeros(3, 2, 5), &a, &SparseRows::from_dense(&f), Dropout::Off).unwrap();
        assert!(fwd.logits.iter().all(|&v| v == 0.0));
        assert!(fwd.probs.matrix().iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn single_node_hand_evaluation() {
        let a = Propagator::from_dense(&array![[1.0]]);
        let p = GcnParams { w1: array![[1.0]], w2: array![[1.0]] };
        let fwd = gcn_forward(&p, &a, &SparseRows::from_dense(&array![[1.0]]), Dropout::Off).unwrap();
        assert_eq!(fwd.logits, array![[1.0]]);
    }

    #[test]
    fn propagator_matches_dense() {
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let m = Array2::from_shape_fn((5, 2), |(i, j)| (i * 3 + j) as f64 - 4.0);
        let dense = g.normalized_adjacency().dot(&m);
        let sparse = Propagator::new(&g).apply(&m);
        assert!((dense - sparse).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn sparse_products_match_dense() {
        let a = Array2::from_shape_fn((4, 3), |(i, j)| if (i + j) % 2 == 0 { (i + 2 * j) as f64 } else { 0.0 });
        let m = Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - j as f64 + 0.5);
        let g = Array2::from_shape_fn((4, 2), |(i, j)| (i * j) as f64 - 1.0);
        let s = SparseRows::from_dense(&a);
        assert_eq!(s.dot(&m), a.dot(&m));
        assert_eq!(s.t_dot(&g), a.t().dot(&g));
    }

    #[test]
    fn permutation_equivariance() {
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let edges: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let gp = Graph::new(5, &edges).unwrap();
        let mut r = rng::seeded(4);
        let p = GcnParams::glorot(3, 4, 2, &mut r);
        let f = Array2::from_shape_fn((5, 3), |(i, j)| ((i + 2 * j) % 4) as f64);
        let mut fp = Array2::zeros((5, 3));
        for i in 0..5 {
            fp.row_mut(perm[i]).assign(&f.row(i));
        }
        let o = gcn_forward(&p, &Propagator::new(&g), &SparseRows::from_dense(&f), Dropout::Off).unwrap().logits;
        let op = gcn_forward(&p, &Propagator::new(&gp), &SparseRows::from_dense(&fp), Dropout::Off).unwrap().logits;
        for i in 0..5 {
            for j in 0..2 {
                assert!((o[[i, j]] - op[[perm[i], j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Propagator::new(&Graph::path(3));
        let f = SparseRows::from_dense(&Array2::zeros((3, 4)));
        assert!(matches!(
            gcn_forward(&GcnParams::zeros(5, 2, 2), &a, &f, Dropout::Off),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = GcnParams { w1: array![[1.0]], w2: array![[-1.0]] };
        let g = GcnParams { w1: array![[2.0]], w2: array![[-3.0]] };
        let mut adam = Adam::new(&p, 0.01);
        adam.update(&mut p, &g);
        assert!((p.w1[[0, 0]] - 0.99).abs() < 1e-9);
        assert!((p.w2[[0, 0]] + 0.99).abs() < 1e-9);
    }
}
