//! Datasets, features and semi-supervised splits.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{sbm_generate, Graph};
use crate::rng;

pub const CORA_NODES: usize = 2708;
pub const CORA_FEATURES: usize = 1433;
pub const CORA_CLASSES: usize = 7;
/// Feature dimension of synthetic SBM datasets.
pub const SBM_FEATURES: usize = 64;
/// Environment variable naming the dataset root directory.
pub const DATA_DIR_ENV: &str = "DISTSIG_DATA_DIR";

/// Row-normalised node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    /// Scales every row with nonzero sum to sum 1.
    pub fn row_normalized(mut x: Array2<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        for mut row in x.rows_mut() {
            let s = row.sum();
            if s != 0.0 {
                row /= s;
            }
        }
        Ok(Self(x))
    }

    /// Features used as given (no normalisation).
    pub fn raw(x: Array2<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self(x))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Class names in label order, when the source has them.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses the raw citation format: a content file of
/// `<id> <binary features…> <class>` lines and a cites file of
/// `<cited> <citing>` lines. Citations become undirected simple edges;
/// self-citations and repeats are dropped with a warning. When
/// `feature_dim` is `None` it is taken from the first content line.
pub fn load_raw_citation(
    content_path: &Path,
    cites_path: &Path,
    feature_dim: Option<usize>,
) -> Result<Dataset> {
    let content = read(content_path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut class_of: Vec<String> = Vec::new();
    let mut dim = feature_dim;
    for (lineno, line) in content.lines().enumerate() {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: content_path.to_path_buf(), line: line_no, msg };
        if fields.len() < 3 {
            return Err(err("expected id, features and class".into()));
        }
        let got = fields.len() - 2;
        let want = *dim.get_or_insert(got);
        if got != want {
            return Err(err(format!("expected {want} features, found {got}")));
        }
        let id = fields[0].to_string();
        if ids.contains_key(&id) {
            return Err(err(format!("duplicate paper id {id:?}")));
        }
        for f in &fields[1..fields.len() - 1] {
            let v: f64 = f.parse().map_err(|_| err(format!("bad feature value {f:?}")))?;
            rows.push(v);
        }
        ids.insert(id, class_of.len());
        class_of.push(fields[fields.len() - 1].to_string());
    }
    let n = class_of.len();
    let dim = dim.unwrap_or(0);
    let features = Array2::from_shape_vec((n, dim), rows).expect("row lengths checked");

    let names: BTreeMap<&str, usize> = {
        let mut set: Vec<&str> = class_of.iter().map(String::as_str).collect();
        set.sort_unstable();
        set.dedup();
        set.into_iter().enumerate().map(|(i, s)| (s, i)).collect()
    };
    let labels = class_of.iter().map(|c| names[c.as_str()]).collect();
    let class_names: Vec<String> = names.keys().map(|s| s.to_string()).collect();

    let cites = read(cites_path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in cites.lines().enumerate() {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: cites_path.to_path_buf(),
                line: line_no,
                msg: "expected \"<cited> <citing>\"".into(),
            });
        }
        let lookup = |id: &str| {
            ids.get(id).copied().ok_or_else(|| Error::DanglingCitation {
                path: cites_path.to_path_buf(),
                line: line_no,
                id: id.to_string(),
            })
        };
        pairs.push((lookup(fields[0])?, lookup(fields[1])?));
    }
    if pairs.is_empty() {
        log::warn!("{}: no citations, graph is edgeless", cites_path.display());
    }
    let (graph, dropped) = Graph::from_pairs_lossy(n, &pairs)?;
    if dropped > 0 {
        log::warn!("dropped {dropped} self-citation(s) or repeated citation(s)");
    }
    Ok(Dataset {
        name: "cora".into(),
        graph,
        features: FeatureMatrix::row_normalized(features)?,
        num_classes: class_names.len(),
        labels,
        class_names,
    })
}

/// Loads the raw Cora files, requiring 1433 features per paper.
pub fn load_cora(content_path: &Path, cites_path: &Path) -> Result<Dataset> {
    load_raw_citation(content_path, cites_path, Some(CORA_FEATURES))
}

/// `(cora.content, cora.cites)` under `dir` or `dir/cora`, if present.
pub fn find_cora(dir: &Path) -> Option<(PathBuf, PathBuf)> {
    [dir.join("cora"), dir.to_path_buf()]
        .into_iter()
        .map(|d| (d.join("cora.content"), d.join("cora.cites")))
        .find(|(c, e)| c.is_file() && e.is_file())
}

/// Cora location from [`DATA_DIR_ENV`], if the files exist.
pub fn find_cora_from_env() -> Option<(PathBuf, PathBuf)> {
    std::env::var_os(DATA_DIR_ENV).and_then(|d| find_cora(Path::new(&d)))
}

/// Node features for synthetic SBM datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SbmFeatures {
    /// One-hot node id, truncated or zero-padded to [`SBM_FEATURES`] columns.
    OneHot,
    /// Gaussian rows of dimension [`SBM_FEATURES`] with unit expected norm;
    /// nearly orthogonal across nodes and free of block information.
    #[default]
    Gaussian,
}

pub fn sbm_features(kind: SbmFeatures, n: usize, seed: u64) -> FeatureMatrix {
    match kind {
        SbmFeatures::OneHot => FeatureMatrix(Array2::from_shape_fn((n, SBM_FEATURES), |(i, j)| {
            f64::from(u8::from(i == j))
        })),
        SbmFeatures::Gaussian => {
            let mut rng = rng::substream(seed, 0xFEA7);
            let scale = 1.0 / (SBM_FEATURES as f64).sqrt();
            FeatureMatrix(Array2::from_shape_simple_fn((n, SBM_FEATURES), || {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            }))
        }
    }
}

/// Equal-block SBM dataset with `blocks` communities over `n` nodes.
pub fn sbm_dataset(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    features: SbmFeatures,
    seed: u64,
) -> Result<Dataset> {
    if blocks == 0 || n < blocks {
        return Err(Error::Config(format!("cannot split {n} nodes into {blocks} blocks")));
    }
    let sizes: Vec<usize> = (0..blocks).map(|b| n / blocks + usize::from(b < n % blocks)).collect();
    let sbm = sbm_generate(&sizes, p_in, p_out, seed)?;
    Ok(Dataset {
        name: "sbm".into(),
        features: sbm_features(features, n, seed),
        graph: sbm.graph,
        labels: sbm.labels,
        num_classes: blocks,
        class_names: (0..blocks).map(|b| format!("block{b}")).collect(),
    })
}

/// Whitespace-separated feature rows, one line per node.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let text = read(path)?;
    let mut rows = Vec::new();
    let mut width = None;
    let mut count = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { path: path.to_path_buf(), line: lineno + 1, msg };
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| err(format!("bad value {f:?}"))))
            .collect::<Result<_>>()?;
        let w = *width.get_or_insert(vals.len());
        if vals.len() != w {
            return Err(err(format!("expected {w} values, found {}", vals.len())));
        }
        rows.extend(vals);
        count += 1;
    }
    let x = Array2::from_shape_vec((count, width.unwrap_or(0)), rows).expect("widths checked");
    FeatureMatrix::row_normalized(x)
}

/// Train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// `per_class` training nodes per class, then `val_size` and `test_size`
/// nodes from the rest, all following one seeded shuffle.
pub fn make_split(
    labels: &[usize],
    per_class: usize,
    val_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<Split> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0; classes];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some((c, &have)) = counts.iter().enumerate().find(|(_, &k)| k < per_class) {
        return Err(Error::InsufficientNodes(format!(
            "class {c} has {have} nodes, {per_class} requested for training"
        )));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng::substream(seed, 0x5917));
    let mut taken = vec![0; classes];
    let mut train = Vec::with_capacity(per_class * classes);
    let mut rest = Vec::new();
    for v in order {
        if taken[labels[v]] < per_class {
            taken[labels[v]] += 1;
            train.push(v);
        } else {
            rest.push(v);
        }
    }
    if rest.len() < val_size + test_size {
        return Err(Error::InsufficientNodes(format!(
            "{} nodes left after training, {} requested for validation and test",
            rest.len(),
            val_size + test_size
        )));
    }
    let test = rest[val_size..val_size + test_size].to_vec();
    rest.truncate(val_size);
    let (mut train, mut val, mut test) = (train, rest, test);
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test, seed })
}
