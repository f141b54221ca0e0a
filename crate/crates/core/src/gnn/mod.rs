//! Two-layer GCN with the regularised training variants.

pub mod data;
pub mod model;
pub mod train;

pub use data::{
    find_cora, find_cora_from_env, load_cora, load_raw_citation, make_split, read_features,
    sbm_dataset, sbm_features, Dataset, FeatureMatrix, SbmFeatures, Split, DATA_DIR_ENV,
};
pub use model::{
    gcn_backward, gcn_forward, Adam, Dropout, Forward, GcnParams, Propagator, SparseRows,
};
pub use train::{
    accuracy, cross_entropy, evaluate, loss_and_grad, regularizer, run_seeds, train, tune_eta,
    AnalysisContext, EpochRecord, LossEval, Metrics, Problem, RegNorm, SplitSpec, TrainConfig,
    TrainOutcome, Variant, ETA_GRID, HF_CUT,
};
