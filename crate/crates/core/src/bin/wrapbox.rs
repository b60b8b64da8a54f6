use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wrapbox::attribute::Selector;
use wrapbox::explain::Policy;
use wrapbox::models::{LMeansParams, LogRegParams};
use wrapbox::pipeline::{self, RowSet, RunConfig};
use wrapbox::{ModelSpec, Result, WrapError};

/// Interpretable wrapper-box classifiers over embeddings.
///
/// Settings come from `--config` (JSON) with command-line flags taking
/// precedence.
#[derive(Parser)]
#[command(name = "wrapbox", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fitted model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output file; stdout when omitted (required for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Attribution worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dataset (.wbx or .csv).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a Gaussian-blob dataset.
    Synth(SynthArgs),
    /// Split a dataset and fit a model on its training rows.
    Fit(FitArgs),
    /// Predict labels for dataset rows or external queries (JSONL).
    Predict(InputArgs),
    /// Explain predictions with supporting training rows (JSONL).
    Explain {
        #[command(flatten)]
        input: InputArgs,
        /// case1 (all support), case2 (m of the support) or case3 (kNN with k = m).
        #[arg(long)]
        policy: Option<Policy>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Find training subsets whose removal flips each prediction (JSONL).
    Attribute {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        phi: Option<usize>,
        /// greedy or knn; defaults to knn for kNN models.
        #[arg(long)]
        selector: Option<String>,
        /// Skip refitting to verify each subset.
        #[arg(long)]
        no_verify: bool,
        /// Include per-input wall time (output is then not reproducible).
        #[arg(long)]
        timings: bool,
        /// Also write the summary as a JSON file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Classification metrics, optionally against a baseline (JSON).
    Evaluate {
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Attribution JSONL whose summary is folded into the report.
        #[arg(long)]
        attribution: Option<PathBuf>,
        #[arg(long)]
        classes: Option<u32>,
    },
    /// Two-component PCA projection as `id,label,pc1,pc2` CSV.
    Project,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    classes: Option<u32>,
    #[arg(long)]
    dims: Option<usize>,
    /// Distance between class means, in standard deviations.
    #[arg(long)]
    separation: Option<f64>,
    /// Row multiplier for class 0.
    #[arg(long)]
    skew: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// knn, tree, lmeans or logreg.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// L-means cluster count (defaults to the number of classes).
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Train,valid,test fractions, e.g. 0.7,0.2,0.1.
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<f64>>,
    /// Fit on logistic-regression logits instead of raw features.
    #[arg(long)]
    logit_transform: bool,
}

#[derive(Args)]
struct InputArgs {
    /// train, valid, test or all.
    #[arg(long)]
    rows: Option<RowSet>,
    /// External query dataset instead of model rows.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Use only the first N inputs.
    #[arg(long)]
    limit: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn mismatch(flag: &str, spec: &ModelSpec) -> WrapError {
    WrapError::Config(format!("--{flag} does not apply to a {} model", spec.kind()))
}

fn apply_model_flags(spec: &mut ModelSpec, a: FitArgs) -> Result<()> {
    if let Some(kind) = &a.kind {
        if kind != spec.kind() {
            *spec = match kind.as_str() {
                "knn" => ModelSpec::knn(),
                "tree" => ModelSpec::tree(),
                "lmeans" => ModelSpec::Lmeans(LMeansParams::default()),
                "logreg" => ModelSpec::Logreg(LogRegParams::default()),
                other => return Err(WrapError::Config(format!("unknown model kind {other:?}"))),
            };
        }
    }
    macro_rules! field {
        ($flag:literal, $value:expr, $($pat:pat => $slot:expr),+) => {
            if let Some(v) = $value {
                match spec {
                    $($pat => $slot = v,)+
                    #[allow(unreachable_patterns)]
                    other => return Err(mismatch($flag, other)),
                }
            }
        };
    }
    field!("k", a.k, ModelSpec::Knn { k } => *k);
    field!("max-depth", a.max_depth, ModelSpec::Tree { max_depth, .. } => *max_depth);
    field!("min-samples-leaf", a.min_samples_leaf, ModelSpec::Tree { min_samples_leaf, .. } => *min_samples_leaf);
    field!("clusters", a.clusters.map(Some), ModelSpec::Lmeans(p) => p.n_clusters);
    field!("max-iter", a.max_iter, ModelSpec::Lmeans(p) => p.max_iter);
    field!("tol", a.tol, ModelSpec::Lmeans(p) => p.tol);
    field!("l2", a.l2, ModelSpec::Logreg(p) => p.l2);
    field!("lr", a.lr, ModelSpec::Logreg(p) => p.lr);
    field!("epochs", a.epochs, ModelSpec::Logreg(p) => p.epochs);
    field!("tau", a.tau, ModelSpec::Logreg(p) => p.tau);
    Ok(())
}

fn apply_inputs(cfg: &mut RunConfig, a: InputArgs) {
    set(&mut cfg.rows, a.rows);
    if a.queries.is_some() {
        cfg.queries = a.queries;
    }
    if a.limit.is_some() {
        cfg.limit = a.limit;
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (slot, value) in [(&mut cfg.model_file, c.model), (&mut cfg.out, c.out), (&mut cfg.data, c.data)] {
        if value.is_some() {
            *slot = value;
        }
    }
    set(&mut cfg.seed, c.seed);
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }

    match cli.cmd {
        Cmd::Synth(a) => {
            set(&mut cfg.synth.n_per_class, a.n_per_class);
            set(&mut cfg.synth.n_classes, a.classes);
            set(&mut cfg.synth.dims, a.dims);
            set(&mut cfg.synth.separation, a.separation);
            set(&mut cfg.synth.skew, a.skew);
            pipeline::cmd_synth(&cfg)
        }
        Cmd::Fit(a) => {
            if let Some(s) = &a.split {
                cfg.split = s.as_slice().try_into().map_err(|_| {
                    WrapError::Config(format!("--split takes 3 comma-separated fractions, got {}", s.len()))
                })?;
            }
            cfg.logit_transform |= a.logit_transform;
            apply_model_flags(&mut cfg.model, a)?;
            pipeline::cmd_fit(&cfg)
        }
        Cmd::Predict(a) => {
            apply_inputs(&mut cfg, a);
            pipeline::cmd_predict(&cfg)
        }
        Cmd::Explain { input, policy, m } => {
            apply_inputs(&mut cfg, input);
            set(&mut cfg.policy, policy);
            set(&mut cfg.m, m);
            pipeline::cmd_explain(&cfg)
        }
        Cmd::Attribute {
            input,
            bins,
            phi,
            selector,
            no_verify,
            timings,
            summary,
        } => {
            apply_inputs(&mut cfg, input);
            set(&mut cfg.attribution.bins, bins);
            set(&mut cfg.attribution.phi, phi);
            if let Some(s) = selector {
                cfg.selector = Some(match s.as_str() {
                    "greedy" => Selector::Greedy,
                    "knn" => Selector::Knn,
                    other => return Err(WrapError::Config(format!("unknown selector {other:?}"))),
                });
            }
            cfg.verify &= !no_verify;
            cfg.timings |= timings;
            if summary.is_some() {
                cfg.summary = summary;
            }
            pipeline::cmd_attribute(&cfg)
        }
        Cmd::Evaluate {
            predictions,
            baseline,
            attribution,
            classes,
        } => {
            for (slot, value) in [
                (&mut cfg.predictions, predictions),
                (&mut cfg.baseline, baseline),
                (&mut cfg.attribution_file, attribution),
            ] {
                if value.is_some() {
                    *slot = value;
                }
            }
            if classes.is_some() {
                cfg.n_classes = classes;
            }
            pipeline::cmd_evaluate(&cfg)
        }
        Cmd::Project => pipeline::cmd_project(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wrapbox: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
