//! Command-line interface.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage or configuration,
//! 3 I/O or input format, 4 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dist::{run_corpus, BoundsConfig};
use crate::error::{Error, Result};
use crate::exec::{configure_threads, Execution};
use crate::gnn::{
    find_cora, load_cora, read_features, sbm_dataset, sbm_features, train, tune_eta,
    AnalysisContext, Dataset, RegNorm, SbmFeatures, SplitSpec, TrainConfig, TrainOutcome, Variant,
    DATA_DIR_ENV,
};
use crate::graph::{read_graph, read_labels, sbm_generate, write_graph, write_labels};
use crate::regularizer::nonuniformity_csv;
use crate::spectral::{
    gft, high_freq_fraction, matched_random_signal, normalize_signal, spectrum_csv,
    Spectrum,
};

pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Parser, PartialEq)]
#[command(name = "distsig", version, about = "Distributional graph signals: bounds, spectra and regularised GCN training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for independent trials.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum Command {
    /// Graph Fourier spectra of the label signal, a matched random signal and output columns.
    Spectrum(SpectrumArgs),
    /// Check the total-variation bound chains on random instances.
    Bounds(BoundsArgs),
    /// Train a GCN variant and write its metrics.
    Train(TrainArgs),
    /// Non-uniformity counts of plain GCN against a regularised variant.
    Analyze(TrainArgs),
    /// Generate an SBM graph and its block labels.
    GenSbm(GenSbmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Cora,
    Sbm,
    File,
}

#[derive(Debug, Args, PartialEq)]
pub struct DatasetArgs {
    #[arg(long, value_enum, default_value = "sbm")]
    pub dataset: DatasetKind,
    /// Graph file (`--dataset file`).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Feature rows (`--dataset file`); random Gaussian features when absent.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Label file (`--dataset file`).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// SBM node count.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// SBM block count.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub sbm_features: SbmFeatureArg,
    /// Training labels per class.
    #[arg(long)]
    pub per_class: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SbmFeatureArg {
    OneHot,
    Gaussian,
}

impl From<SbmFeatureArg> for SbmFeatures {
    fn from(a: SbmFeatureArg) -> Self {
        match a {
            SbmFeatureArg::OneHot => SbmFeatures::OneHot,
            SbmFeatureArg::Gaussian => SbmFeatures::Gaussian,
        }
    }
}

#[derive(Debug, Args, PartialEq)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_enum, ignore_case = true, default_value = "r")]
    pub variant: Variant,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Divisor of the regulariser before weighting by η.
    #[arg(long, value_enum, default_value = "volume")]
    pub reg_norm: RegNorm,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Choose η on the validation set from a fixed grid.
    #[arg(long)]
    pub tune: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, PartialEq)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Transform the raw signals instead of mean-centred, unit-norm ones.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args, PartialEq)]
pub struct BoundsArgs {
    /// Largest node count.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Largest alphabet size.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, PartialEq)]
pub struct GenSbmArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Block count.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for `graph.txt` and `labels.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(std::iter::once("distsig".into()).chain(argv.into_iter().map(Into::into)))
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InsufficientNodes(_) | Error::CliqueLimit { .. } => EXIT_USAGE,
        Error::Io { .. } | Error::Parse { .. } | Error::DanglingCitation { .. } => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `std::env::args`, runs the command and reports errors on stderr.
pub fn run_main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command; `Ok` carries 0 or [`EXIT_VIOLATION`].
pub fn execute(cli: &Cli) -> Result<u8> {
    configure_threads(cli.jobs);
    match &cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Train(a) => train_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Spectrum(a) => spectrum(&a.train, !a.no_normalize),
        Command::GenSbm(a) => gen_sbm(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(p, text).map_err(|e| Error::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn bounds(a: &BoundsArgs) -> Result<u8> {
    let cfg = BoundsConfig { trials: a.trials, n_max: a.n, m_max: a.m, seed: a.seed, ..Default::default() };
    let report = run_corpus(&cfg, Execution::Parallel)?;
    emit(a.out.as_deref(), &to_json(&report))?;
    if report.violation_count > 0 {
        eprintln!("{} violation(s)", report.violation_count);
        return Ok(EXIT_VIOLATION);
    }
    Ok(0)
}

/// Loads the dataset selected by the flags.
pub fn load_dataset(a: &DatasetArgs, seed: u64) -> Result<Dataset> {
    match a.dataset {
        DatasetKind::Cora => {
            let dir = std::env::var_os(DATA_DIR_ENV)
                .ok_or_else(|| Error::Config(format!("--dataset cora needs {DATA_DIR_ENV}")))?;
            let (content, cites) = find_cora(Path::new(&dir)).ok_or_else(|| {
                Error::Config(format!("no cora.content/cora.cites under {}", Path::new(&dir).display()))
            })?;
            load_cora(&content, &cites)
        }
        DatasetKind::Sbm => sbm_dataset(a.n, a.m, a.p_in, a.p_out, a.sbm_features.into(), seed),
        DatasetKind::File => {
            let need = |p: &Option<PathBuf>, flag: &str| {
                p.clone().ok_or_else(|| Error::Config(format!("--dataset file needs {flag}")))
            };
            let graph = read_graph(need(&a.graph, "--graph")?)?;
            let labels = read_labels(need(&a.labels, "--labels")?)?;
            if labels.len() != graph.n() {
                return Err(Error::DimensionMismatch { expected: graph.n(), got: labels.len() });
            }
            let features = match &a.features {
                Some(p) => read_features(p)?,
                None => sbm_features(SbmFeatures::default(), graph.n(), seed),
            };
            if features.n() != graph.n() {
                return Err(Error::DimensionMismatch { expected: graph.n(), got: features.n() });
            }
            let num_classes = labels.iter().max().map_or(0, |m| m + 1);
            Ok(Dataset {
                name: "file".into(),
                graph,
                features,
                labels,
                num_classes,
                class_names: (0..num_classes).map(|c| c.to_string()).collect(),
            })
        }
    }
}

fn split_spec(a: &DatasetArgs, ds: &Dataset) -> SplitSpec {
    match (a.dataset, a.per_class) {
        (DatasetKind::Cora, None) => SplitSpec::CORA,
        (_, per_class) => SplitSpec::labelled(ds.n(), ds.num_classes, per_class.unwrap_or(5)),
    }
}

fn run_training(a: &TrainArgs, variant: Variant, ds: &Dataset, ctx: &AnalysisContext) -> Result<TrainOutcome> {
    let split = split_spec(&a.data, ds).make(&ds.labels, a.seed)?;
    let cfg = TrainConfig {
        variant,
        eta: a.eta,
        reg_norm: a.reg_norm,
        epochs: a.epochs,
        seed: a.seed,
        ..Default::default()
    };
    if a.tune && !matches!(variant, Variant::Gcn | Variant::Lap) {
        let (eta, run) = tune_eta(ds, &split, &cfg, ctx, Execution::Parallel)?;
        log::info!("selected eta {eta}");
        Ok(run)
    } else {
        train(ds, &split, &cfg, ctx)
    }
}

fn train_cmd(a: &TrainArgs) -> Result<u8> {
    let ds = load_dataset(&a.data, a.seed)?;
    let ctx = AnalysisContext::new(&ds.graph)?;
    let run = run_training(a, a.variant, &ds, &ctx)?;
    log::info!("test accuracy {:.4}", run.metrics.test_acc);
    emit(a.out.as_deref(), &to_json(&run.metrics))?;
    Ok(0)
}

fn analyze(a: &TrainArgs) -> Result<u8> {
    let ds = load_dataset(&a.data, a.seed)?;
    let ctx = AnalysisContext::new(&ds.graph)?;
    let mut variants = vec![Variant::Gcn];
    if a.variant != Variant::Gcn {
        variants.push(a.variant);
    }
    let runs = Execution::Parallel.map(&variants, |&v| run_training(a, v, &ds, &ctx));
    let runs: Vec<TrainOutcome> = runs.into_iter().collect::<Result<_>>()?;
    let csv = nonuniformity_csv(
        variants.iter().zip(&runs).map(|(v, r)| (v.name(), r.metrics.nonuniformity_sweep.as_slice())),
    );
    emit(a.out.as_deref(), &csv)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    main_component_nodes: usize,
    normalized: bool,
    hf_cut: f64,
    hf_fraction_label: f64,
    hf_fraction_random: f64,
    hf_fraction_phi: Vec<Option<f64>>,
    test_acc: Option<f64>,
}

fn signal_spectrum(s: &Spectrum, signal: &[f64], normalize: bool) -> Result<Option<(Vec<f64>, f64)>> {
    let prepared = if normalize {
        normalize_signal(signal)
    } else if signal.iter().all(|&v| v == 0.0) {
        Err(Error::ZeroVector)
    } else {
        Ok(signal.to_vec())
    };
    match prepared {
        Ok(x) => {
            let xhat = gft(s, &x)?.to_vec();
            let hf = high_freq_fraction(&xhat, crate::gnn::HF_CUT)?;
            Ok(Some((xhat, hf)))
        }
        Err(Error::ZeroVector) => Ok(None),
        Err(e) => Err(e),
    }
}

fn spectrum(a: &TrainArgs, normalize: bool) -> Result<u8> {
    let out = a
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("spectrum needs --out DIR".into()))?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ds = load_dataset(&a.data, a.seed)?;
    let ctx = AnalysisContext::new(&ds.graph)?;
    let write = |name: &str, s: &Spectrum, xhat: &[f64]| {
        let p = out.join(name);
        fs::write(&p, spectrum_csv(s, xhat)).map_err(|e| Error::io(&p, e))
    };
    let labels: Vec<usize> = ctx.nodes.iter().map(|&v| ds.labels[v]).collect();
    let as_signal = |l: &[usize]| l.iter().map(|&c| c as f64).collect::<Vec<f64>>();
    let mut hf = [f64::NAN; 2];
    let random = matched_random_signal(&labels, a.seed);
    for (k, (name, sig)) in [("label.csv", as_signal(&labels)), ("random.csv", as_signal(&random))]
        .into_iter()
        .enumerate()
    {
        let (xhat, frac) = signal_spectrum(&ctx.spectrum, &sig, normalize)?.unwrap_or_else(|| {
            (vec![0.0; sig.len()], 0.0)
        });
        write(name, &ctx.spectrum, &xhat)?;
        hf[k] = frac;
    }
    let mut summary = SpectrumSummary {
        main_component_nodes: ctx.nodes.len(),
        normalized: normalize,
        hf_cut: crate::gnn::HF_CUT,
        hf_fraction_label: hf[0],
        hf_fraction_random: hf[1],
        hf_fraction_phi: Vec::new(),
        test_acc: None,
    };
    if a.epochs > 0 {
        let run = run_training(a, a.variant, &ds, &ctx)?;
        let x = run.final_probs.matrix();
        for c in 0..x.ncols() {
            let col: Vec<f64> = ctx.nodes.iter().map(|&v| x[[v, c]]).collect();
            let res = signal_spectrum(&ctx.spectrum, &col, normalize)?;
            let xhat = res.as_ref().map_or_else(|| vec![0.0; col.len()], |(x, _)| x.clone());
            write(&format!("phi_col{}.csv", c + 1), &ctx.spectrum, &xhat)?;
            summary.hf_fraction_phi.push(res.map(|(_, f)| f));
        }
        summary.test_acc = Some(run.metrics.test_acc);
    }
    let p = out.join("summary.json");
    fs::write(&p, to_json(&summary)).map_err(|e| Error::io(&p, e))?;
    Ok(0)
}

fn gen_sbm(a: &GenSbmArgs) -> Result<u8> {
    if a.m == 0 || a.n < a.m {
        return Err(Error::Config(format!("cannot split {} nodes into {} blocks", a.n, a.m)));
    }
    let sizes: Vec<usize> = (0..a.m).map(|b| a.n / a.m + usize::from(b < a.n % a.m)).collect();
    let sbm = sbm_generate(&sizes, a.p_in, a.p_out, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_graph(a.out.join("graph.txt"), &sbm.graph)?;
    write_labels(a.out.join("labels.txt"), &sbm.labels)?;
    Ok(0)
}
