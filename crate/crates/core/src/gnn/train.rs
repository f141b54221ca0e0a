//! Training, evaluation and output analysis.

use ndarray::Array2;
use serde::Serialize;

use super::data::{make_split, Dataset, Split};
use super::model::{gcn_backward, gcn_forward, Adam, Dropout, GcnParams, Propagator, SparseRows};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::regularizer::{
    argmax_rows, loss_components, nonuniformity_sweep, smoothness,
    smoothness_grad, softmax_backward, LossParts, NonuniformityRow, ProbMatrix, WeightDiag,
    DEFAULT_EPSILONS,
};
use crate::rng;
use crate::spectral::{eig_sym, gft, high_freq_fraction, normalize_signal, Spectrum};

/// Validation grid searched by [`tune_eta`].
pub const ETA_GRID: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
/// Spectral cut used for the high-frequency fraction of output columns.
pub const HF_CUT: f64 = 0.5;

/// Regularised training variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// No regulariser.
    Gcn,
    /// `L0 = L1 + L2` on the softmax output.
    R,
    /// `L1` on the softmax output.
    R1,
    /// `L2` on the softmax output.
    R2,
    /// `L1` on the raw logits.
    R3,
    /// `L0` on one-hot predictions; logged only, no gradient.
    Lap,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Gcn, Variant::R, Variant::R1, Variant::R2, Variant::R3, Variant::Lap];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gcn => "gcn",
            Variant::R => "r",
            Variant::R1 => "r1",
            Variant::R2 => "r2",
            Variant::R3 => "r3",
            Variant::Lap => "lap",
        }
    }
}

/// Divisor applied to the regulariser before weighting by η.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegNorm {
    /// Raw trace.
    Sum,
    /// Divided by the node count.
    Nodes,
    /// Divided by the graph volume `2|E|`.
    #[default]
    Volume,
}

impl RegNorm {
    pub fn divisor(self, g: &Graph) -> f64 {
        match self {
            RegNorm::Sum => 1.0,
            RegNorm::Nodes => g.n().max(1) as f64,
            RegNorm::Volume => (2 * g.edge_count()).max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub eta: f64,
    pub reg_norm: RegNorm,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::R,
            eta: 0.5,
            reg_norm: RegNorm::Volume,
            hidden: 16,
            epochs: 200,
            lr: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad("eta must be finite and nonnegative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden dimension must be at least 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight decay must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout rate must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Everything the loss needs besides the parameters.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub graph: &'a Graph,
    pub a_hat: Propagator,
    pub weights: WeightDiag,
    pub features: SparseRows,
    pub labels: &'a [usize],
    pub num_classes: usize,
    pub train: &'a [usize],
}

impl<'a> Problem<'a> {
    pub fn new(
        graph: &'a Graph,
        features: &'a Array2<f64>,
        labels: &'a [usize],
        num_classes: usize,
        train: &'a [usize],
    ) -> Self {
        Self {
            graph,
            a_hat: Propagator::new(graph),
            weights: WeightDiag::default_for(graph),
            features: SparseRows::from_dense(features),
            labels,
            num_classes,
            train,
        }
    }

    pub fn from_dataset(ds: &'a Dataset, split: &'a Split) -> Self {
        Self::new(&ds.graph, ds.features.matrix(), &ds.labels, ds.num_classes, &split.train)
    }
}

/// Unweighted regulariser value of `variant` and its gradient with respect to
/// the logits (`None` when the variant has no gradient path).
pub fn regularizer(
    variant: Variant,
    g: &Graph,
    d: &WeightDiag,
    logits: &Array2<f64>,
    probs: &ProbMatrix,
) -> Result<(f64, Option<Array2<f64>>)> {
    let x = probs.matrix();
    Ok(match variant {
        Variant::Gcn => (0.0, None),
        Variant::R => {
            let parts = loss_components(probs, g, d)?;
            let gx = smoothness_grad(g, x.view()) + crate::regularizer::nonuniformity_grad(d, x.view());
            (parts.l1 + parts.l2, Some(softmax_backward(x, &gx)))
        }
        Variant::R1 => {
            let parts = loss_components(probs, g, d)?;
            (parts.l1, Some(softmax_backward(x, &smoothness_grad(g, x.view()))))
        }
        Variant::R2 => {
            let parts = loss_components(probs, g, d)?;
            let gx = crate::regularizer::nonuniformity_grad(d, x.view());
            (parts.l2, Some(softmax_backward(x, &gx)))
        }
        Variant::R3 => (smoothness(g, logits.view()), Some(smoothness_grad(g, logits.view()))),
        Variant::Lap => {
            let hard = ProbMatrix::one_hot(&argmax_rows(x.view()), x.ncols())?;
            (loss_components(&hard, g, d)?.l0, None)
        }
    })
}

/// Mean cross-entropy over `nodes`.
pub fn cross_entropy(probs: &ProbMatrix, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let x = probs.matrix();
    -nodes.iter().map(|&v| x[[v, labels[v]]].max(f64::MIN_POSITIVE).ln()).sum::<f64>()
        / nodes.len() as f64
}

/// Fraction of `nodes` whose argmax (lowest index on ties) equals the label.
pub fn accuracy(probs: &ProbMatrix, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let pred = probs.argmax();
    let hits = nodes.iter().filter(|&&v| pred[v] == labels[v]).count();
    hits as f64 / nodes.len() as f64
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub ce: f64,
    /// Unweighted regulariser value.
    pub reg: f64,
    pub grad: GcnParams,
    pub probs: ProbMatrix,
}

/// Total loss `CE + η·reg/norm + (wd/2)·‖W1‖²` and its parameter gradient.
pub fn loss_and_grad(
    p: &Problem<'_>,
    params: &GcnParams,
    cfg: &TrainConfig,
    dropout: Dropout<'_>,
) -> Result<LossEval> {
    let weight_decay = cfg.weight_decay;
    let eta = cfg.eta / cfg.reg_norm.divisor(p.graph);
    let fwd = gcn_forward(params, &p.a_hat, &p.features, dropout)?;
    let x = fwd.probs.matrix();
    let ce = cross_entropy(&fwd.probs, p.labels, p.train);
    let mut grad_o = Array2::zeros(x.raw_dim());
    if !p.train.is_empty() {
        let scale = 1.0 / p.train.len() as f64;
        for &v in p.train {
            let mut row = grad_o.row_mut(v);
            row.scaled_add(scale, &x.row(v));
            row[p.labels[v]] -= scale;
        }
    }
    let (reg, reg_grad) = regularizer(cfg.variant, p.graph, &p.weights, &fwd.logits, &fwd.probs)?;
    if let Some(gr) = reg_grad.filter(|_| eta != 0.0) {
        grad_o.scaled_add(eta, &gr);
    }
    let mut grad = gcn_backward(params, &p.a_hat, &fwd, &grad_o);
    grad.w1.scaled_add(weight_decay, &params.w1);
    let decay = 0.5 * weight_decay * params.w1.iter().map(|w| w * w).sum::<f64>();
    let loss = ce + eta * reg + decay;
    Ok(LossEval { loss, ce, reg, grad, probs: fwd.probs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub ce: f64,
    pub reg: f64,
    pub acc_train: f64,
    pub loss_val: f64,
    pub acc_val: f64,
}

/// Spectral basis of the main connected component, shared across runs.
#[derive(Debug, Clone)]
pub struct AnalysisContext {
    pub nodes: Vec<usize>,
    pub spectrum: Spectrum,
}

impl AnalysisContext {
    pub fn new(g: &Graph) -> Result<Self> {
        let (main, nodes) = g.main_component();
        let spectrum = eig_sym(&main.laplacian())?;
        Ok(Self { nodes, spectrum })
    }

    /// High-frequency fraction of each normalised output column on the main
    /// component; `None` for a constant column.
    pub fn hf_fraction_per_class(&self, probs: &ProbMatrix) -> Result<Vec<Option<f64>>> {
        let x = probs.matrix();
        (0..x.ncols())
            .map(|c| {
                let col: Vec<f64> = self.nodes.iter().map(|&v| x[[v, c]]).collect();
                match normalize_signal(&col) {
                    Ok(s) => {
                        let xhat = gft(&self.spectrum, &s)?;
                        high_freq_fraction(xhat.as_slice().expect("contiguous"), HF_CUT).map(Some)
                    }
                    Err(Error::ZeroVector) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub config: TrainConfig,
    pub dataset: String,
    pub nodes: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub per_epoch: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Test accuracy of the best-validation parameters.
    pub test_acc: f64,
    /// Test accuracy of the final-epoch parameters.
    pub final_test_acc: f64,
    /// Regulariser components of the final-epoch output.
    pub final_loss_parts: LossParts,
    pub hf_fraction_per_class: Vec<Option<f64>>,
    pub nonuniformity_sweep: Vec<NonuniformityRow>,
    pub entry_count: usize,
}

impl Metrics {
    /// `(near-uniform, near-one)` counts of the final output at `eps`.
    pub fn nonuniformity_at(&self, eps: f64) -> Option<(usize, usize)> {
        let find = |kind: &str| {
            self.nonuniformity_sweep
                .iter()
                .find(|r| r.kind == kind && r.epsilon == eps)
                .map(|r| r.count)
        };
        Some((find("near_uniform")?, find("near_one")?))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best_params: GcnParams,
    pub final_params: GcnParams,
    /// Softmax output of the final-epoch parameters, without dropout.
    pub final_probs: ProbMatrix,
    pub metrics: Metrics,
}

/// Trains one model; returns best-validation parameters and metrics of the
/// final-epoch output.
pub fn train(
    ds: &Dataset,
    split: &Split,
    cfg: &TrainConfig,
    ctx: &AnalysisContext,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let p = Problem::from_dataset(ds, split);
    let mut init_rng = rng::substream(cfg.seed, 1);
    let mut drop_rng = rng::substream(cfg.seed, 2);
    let mut params = GcnParams::glorot(ds.features.dim(), cfg.hidden, ds.num_classes, &mut init_rng);
    let mut adam = Adam::new(&params, cfg.lr);
    let mut per_epoch = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, GcnParams)> = None;
    for epoch in 1..=cfg.epochs {
        let dropout = Dropout::On { rate: cfg.dropout, rng: &mut drop_rng };
        let eval = loss_and_grad(&p, &params, cfg, dropout)
            .map_err(|e| match e {
                Error::NonFinite(_) => Error::Diverged(epoch),
                e => e,
            })?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        let acc_train = accuracy(&eval.probs, &ds.labels, &split.train);
        adam.update(&mut params, &eval.grad);
        if !params.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        let probs = gcn_forward(&params, &p.a_hat, &p.features, Dropout::Off)
            .map_err(|_| Error::Diverged(epoch))?
            .probs;
        let acc_val = accuracy(&probs, &ds.labels, &split.val);
        per_epoch.push(EpochRecord {
            epoch,
            loss: eval.loss,
            ce: eval.ce,
            reg: eval.reg,
            acc_train,
            loss_val: cross_entropy(&probs, &ds.labels, &split.val),
            acc_val,
        });
        if best.as_ref().is_none_or(|(_, v, _)| acc_val > *v) {
            best = Some((epoch, acc_val, params.clone()));
        }
        log::debug!("epoch {epoch}: loss {:.4} val {:.3}", eval.loss, acc_val);
    }
    let (best_epoch, best_val_acc, best_params) = best.expect("epochs >= 1");
    let best_probs = gcn_forward(&best_params, &p.a_hat, &p.features, Dropout::Off)?.probs;
    let final_probs = gcn_forward(&params, &p.a_hat, &p.features, Dropout::Off)?.probs;
    let metrics = Metrics {
        config: *cfg,
        dataset: ds.name.clone(),
        nodes: ds.n(),
        train_size: split.train.len(),
        val_size: split.val.len(),
        test_size: split.test.len(),
        per_epoch,
        best_epoch,
        best_val_acc,
        test_acc: accuracy(&best_probs, &ds.labels, &split.test),
        final_test_acc: accuracy(&final_probs, &ds.labels, &split.test),
        final_loss_parts: loss_components(&final_probs, &ds.graph, &p.weights)?,
        hf_fraction_per_class: ctx.hf_fraction_per_class(&final_probs)?,
        nonuniformity_sweep: nonuniformity_sweep(&final_probs, &DEFAULT_EPSILONS),
        entry_count: final_probs.n() * final_probs.m(),
    };
    Ok(TrainOutcome { best_params, final_params: params, final_probs, metrics })
}

/// Accuracy of `params` on `nodes`, without dropout.
pub fn evaluate(p: &Problem<'_>, params: &GcnParams, nodes: &[usize]) -> Result<f64> {
    let probs = gcn_forward(params, &p.a_hat, &p.features, Dropout::Off)?.probs;
    Ok(accuracy(&probs, p.labels, nodes))
}

/// Picks η from [`ETA_GRID`] by best-validation accuracy (first wins ties),
/// then returns that η with its run.
pub fn tune_eta(
    ds: &Dataset,
    split: &Split,
    cfg: &TrainConfig,
    ctx: &AnalysisContext,
    exec: Execution,
) -> Result<(f64, TrainOutcome)> {
    let runs = exec.map(&ETA_GRID, |&eta| train(ds, split, &TrainConfig { eta, ..*cfg }, ctx));
    let mut best: Option<(f64, TrainOutcome)> = None;
    for (eta, run) in ETA_GRID.iter().zip(runs) {
        let run = run?;
        log::info!("eta {eta}: best val acc {:.4}", run.metrics.best_val_acc);
        if best.as_ref().is_none_or(|(_, b)| run.metrics.best_val_acc > b.metrics.best_val_acc) {
            best = Some((*eta, run));
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Train/validation/test sizes for [`make_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSpec {
    pub per_class: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSpec {
    /// 20 labels per class, 500 validation and 1000 test nodes.
    pub const CORA: SplitSpec = SplitSpec { per_class: 20, val: 500, test: 1000 };

    /// `per_class` labels per class, a fifth of the rest for validation and
    /// the remainder for testing.
    pub fn labelled(n: usize, classes: usize, per_class: usize) -> SplitSpec {
        let rest = n.saturating_sub(per_class * classes);
        SplitSpec { per_class, val: rest / 5, test: rest - rest / 5 }
    }

    pub fn make(&self, labels: &[usize], seed: u64) -> Result<Split> {
        make_split(labels, self.per_class, self.val, self.test, seed)
    }
}

/// Runs `cfg` once per seed, each seed with its own split, in seed order.
pub fn run_seeds(
    ds: &Dataset,
    ctx: &AnalysisContext,
    cfg: &TrainConfig,
    spec: SplitSpec,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<Metrics>> {
    exec.map(seeds, |&seed| {
        let split = spec.make(&ds.labels, seed)?;
        train(ds, &split, &TrainConfig { seed, ..*cfg }, ctx).map(|o| o.metrics)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::data::{sbm_dataset, FeatureMatrix, SbmFeatures};

    fn toy() -> Dataset {
        let graph = Graph::new(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap();
        let f = Array2::from_shape_fn((6, 4), |(i, j)| ((i * 7 + j * 3) % 5) as f64 + 0.5);
        Dataset {
            name: "toy".into(),
            graph,
            features: FeatureMatrix::row_normalized(f).unwrap(),
            labels: vec![0, 0, 1, 1, 2, 2],
            num_classes: 3,
            class_names: vec![],
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { eta: -1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { dropout: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn accuracy_tie_break() {
        let u = ProbMatrix::uniform(4, 3);
        assert_eq!(accuracy(&u, &[0, 1, 0, 2], &[0, 1, 2, 3]), 0.5);
        let perfect = ProbMatrix::one_hot(&[2, 1, 0], 3).unwrap();
        assert_eq!(accuracy(&perfect, &[2, 1, 0], &[0, 1, 2]), 1.0);
    }

    #[test]
    fn r_regularizer_is_l1_plus_l2() {
        let ds = toy();
        let split = Split { train: vec![0, 2, 4], val: vec![1], test: vec![3, 5], seed: 0 };
        let p = Problem::from_dataset(&ds, &split);
        let params = GcnParams::glorot(4, 5, 3, &mut rng::seeded(9));
        let fwd = gcn_forward(&params, &p.a_hat, &p.features, Dropout::Off).unwrap();
        let (reg, _) = regularizer(Variant::R, p.graph, &p.weights, &fwd.logits, &fwd.probs).unwrap();
        let parts = loss_components(&fwd.probs, p.graph, &p.weights).unwrap();
        assert!((reg - (parts.l1 + parts.l2)).abs() < 1e-9);
        let (lap, g) = regularizer(Variant::Lap, p.graph, &p.weights, &fwd.logits, &fwd.probs).unwrap();
        assert!(g.is_none() && lap.is_finite());
    }

    #[test]
    fn eta_zero_matches_plain_gcn() {
        let ds = toy();
        let split = Split { train: vec![0, 2, 4], val: vec![1], test: vec![3, 5], seed: 0 };
        let ctx = AnalysisContext::new(&ds.graph).unwrap();
        let base = TrainConfig { epochs: 15, hidden: 4, seed: 3, ..Default::default() };
        let a = train(&ds, &split, &TrainConfig { variant: Variant::Gcn, ..base }, &ctx).unwrap();
        let b = train(&ds, &split, &TrainConfig { variant: Variant::R, eta: 0.0, ..base }, &ctx).unwrap();
        assert_eq!(a.final_params, b.final_params);
        let key = |m: &Metrics| m.per_epoch.iter().map(|e| (e.loss, e.acc_val)).collect::<Vec<_>>();
        assert_eq!(key(&a.metrics), key(&b.metrics));
    }

    #[test]
    fn final_loss_parts_match_regularizer_module() {
        let ds = toy();
        let split = Split { train: vec![0, 2, 4], val: vec![1], test: vec![3, 5], seed: 0 };
        let ctx = AnalysisContext::new(&ds.graph).unwrap();
        let cfg = TrainConfig { epochs: 5, hidden: 4, ..Default::default() };
        let out = train(&ds, &split, &cfg, &ctx).unwrap();
        let parts = loss_components(&out.final_probs, &ds.graph, &WeightDiag::default_for(&ds.graph)).unwrap();
        assert!((out.metrics.final_loss_parts.l0 - (parts.l1 + parts.l2)).abs() < 1e-9);
        assert_eq!(out.metrics.entry_count, 18);
        assert_eq!(out.metrics.hf_fraction_per_class.len(), 3);
    }

    #[test]
    fn divergence_reports_epoch() {
        let ds = toy();
        let split = Split { train: vec![0, 2, 4], val: vec![1], test: vec![3, 5], seed: 0 };
        let ctx = AnalysisContext::new(&ds.graph).unwrap();
        let cfg = TrainConfig { lr: 1e300, epochs: 10, hidden: 4, ..Default::default() };
        assert!(matches!(train(&ds, &split, &cfg, &ctx), Err(Error::Diverged(_))));
    }

    #[test]
    fn sbm_two_blocks_is_learnable() {
        let ds = sbm_dataset(200, 2, 0.2, 0.01, SbmFeatures::default(), 11).unwrap();
        let ctx = AnalysisContext::new(&ds.graph).unwrap();
        let split = SplitSpec::labelled(200, 2, 5).make(&ds.labels, 11).unwrap();
        for variant in [Variant::Gcn, Variant::R] {
            let cfg = TrainConfig { variant, seed: 11, ..Default::default() };
            let m = train(&ds, &split, &cfg, &ctx).unwrap().metrics;
            assert!(m.test_acc > 0.9, "{variant:?}: {}", m.test_acc);
        }
    }
}
