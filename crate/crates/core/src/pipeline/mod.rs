//! Run configuration and the commands behind the `wrapbox` binary.
//!
//! Every command is a function of a [`RunConfig`] and writes its output to
//! `config.out` (stdout when unset). Given the same config and inputs, the
//! bytes written are identical from run to run; timings are only emitted on
//! request.

mod config;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{RowSet, RunConfig};

use crate::attribute::{attribute_many, attribution_metrics, AttributionSummary, Query, Selector, SubsetResult};
use crate::data::{load_dataset, stratified_split, write_dataset, EmbeddingDataset, SplitSpec};
use crate::error::{Result, WrapError};
use crate::evaluate::{classification_metrics, compare_reports, pca2_project, write_projection, Comparison, MetricReport};
use crate::explain::{explain, ExplanationRecord};
use crate::models::{fit_logreg, logit_transform, LogRegModel, ModelSpec, SavedModel, WrapperModel};
use crate::synth::gaussian_blobs;

pub const MODEL_FORMAT: &str = "wrapbox-model/1";

/// On-disk fitted model: everything needed to rebuild it against its data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub data: PathBuf,
    pub seed: u64,
    pub spec: ModelSpec,
    pub split: SplitSpec,
    /// Logistic regression whose logits replace the raw features.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transform: Option<LogRegModel>,
    pub model: SavedModel,
}

/// A model file loaded together with the (possibly transformed) dataset.
pub struct Fitted {
    pub file: ModelFile,
    pub ds: EmbeddingDataset,
    pub model: WrapperModel,
}

impl Fitted {
    pub fn load(path: &Path, data_override: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WrapError::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| WrapError::Config(format!("{}: not a model file: {e}", path.display())))?;
        if file.format != MODEL_FORMAT {
            return Err(WrapError::Config(format!(
                "{}: unsupported model format {:?}",
                path.display(),
                file.format
            )));
        }
        let raw = load_dataset(data_override.unwrap_or(&file.data))?;
        file.split.validate(raw.n_rows())?;
        let ds = match &file.transform {
            Some(lr) => logit_transform(lr, &raw)?,
            None => raw,
        };
        let model = WrapperModel::from_saved(file.model.clone(), &ds)?;
        Ok(Self { file, ds, model })
    }

    /// Applies the model's feature transform to external queries.
    fn prepare_queries(&self, queries: EmbeddingDataset) -> Result<EmbeddingDataset> {
        match &self.file.transform {
            Some(lr) => logit_transform(lr, &queries),
            None => {
                if queries.n_dims() != self.ds.n_dims() {
                    return Err(WrapError::DimensionMismatch {
                        expected: self.ds.n_dims(),
                        got: queries.n_dims(),
                    });
                }
                Ok(queries)
            }
        }
    }
}

/// The inputs a command runs over: rows of the model's dataset, or an
/// external query file.
enum Inputs {
    Rows(Vec<usize>),
    External(EmbeddingDataset),
}

impl Inputs {
    fn resolve(cfg: &RunConfig, fitted: &Fitted) -> Result<Self> {
        let inputs = match &cfg.queries {
            Some(path) => {
                let q = load_dataset(path)?;
                Inputs::External(fitted.prepare_queries(q)?)
            }
            None => {
                let split = &fitted.file.split;
                let mut rows = match cfg.rows {
                    RowSet::Train => split.train_idx.clone(),
                    RowSet::Valid => split.valid_idx.clone(),
                    RowSet::Test => split.test_idx.clone(),
                    RowSet::All => (0..fitted.ds.n_rows()).collect(),
                };
                if let Some(limit) = cfg.limit {
                    rows.truncate(limit);
                }
                Inputs::Rows(rows)
            }
        };
        if let (Inputs::External(q), Some(limit)) = (&inputs, cfg.limit) {
            if limit < q.n_rows() {
                let keep: Vec<usize> = (0..limit).collect();
                return Ok(Inputs::External(subset_rows(q, &keep)?));
            }
        }
        Ok(inputs)
    }

    /// `(id, true label, features)` for each input.
    fn items<'a>(&'a self, ds: &'a EmbeddingDataset) -> Vec<(u64, u32, &'a [f32])> {
        match self {
            Inputs::Rows(rows) => rows.iter().map(|&r| (ds.row_id(r), ds.label(r), ds.row(r))).collect(),
            Inputs::External(q) => (0..q.n_rows()).map(|i| (q.row_id(i), q.label(i), q.row(i))).collect(),
        }
    }
}

fn subset_rows(ds: &EmbeddingDataset, rows: &[usize]) -> Result<EmbeddingDataset> {
    let features = rows.iter().flat_map(|&r| ds.row(r).iter().copied()).collect();
    EmbeddingDataset::new(
        features,
        ds.n_dims(),
        rows.iter().map(|&r| ds.label(r)).collect(),
        rows.iter().map(|&r| ds.row_id(r)).collect(),
        ds.n_classes(),
        ds.texts().map(|t| rows.iter().map(|&r| t[r].clone()).collect()),
    )
}

fn output(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| WrapError::io(path, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>, cfg: &RunConfig) -> Result<()> {
    let target = cfg.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    w.flush().map_err(|e| WrapError::io(target, e))
}

fn write_json_line<T: Serialize>(w: &mut dyn Write, value: &T, cfg: &RunConfig) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
        .map_err(|e| WrapError::io(cfg.out.clone().unwrap_or_else(|| "<stdout>".into()), e))
}

fn write_json_doc<T: Serialize>(value: &T, cfg: &RunConfig) -> Result<()> {
    let mut w = output(cfg)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .map_err(|e| WrapError::io(cfg.out.clone().unwrap_or_else(|| "<stdout>".into()), e))?;
    finish(w, cfg)
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| WrapError::Config(format!("missing {what}")))
}

/// Generates Gaussian blobs and writes them as WBX1 or CSV (by extension).
pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let out = require(&cfg.out, "output path (--out)")?;
    let mut synth = cfg.synth.clone();
    synth.seed = cfg.seed;
    let ds = gaussian_blobs(&synth)?;
    write_dataset(&ds, out)
}

/// Splits the dataset, fits the configured model on the training rows, and
/// writes a [`ModelFile`].
pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let data = require(&cfg.data, "dataset path (--data)")?;
    let raw = load_dataset(data)?;
    if raw.is_empty() {
        return Err(WrapError::EmptyTrainingSet);
    }
    let split = stratified_split(&raw, cfg.split, cfg.seed)?;
    let present = {
        let mut seen = vec![false; raw.n_classes() as usize];
        split.train_idx.iter().for_each(|&r| seen[raw.label(r) as usize] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if present < 2 {
        return Err(WrapError::SingleClass);
    }
    let spec = cfg.model_spec();
    let transform = if cfg.logit_transform {
        Some(fit_logreg(&raw, &split.train_idx, &cfg.logit)?)
    } else {
        None
    };
    let ds = match &transform {
        Some(lr) => logit_transform(lr, &raw)?,
        None => raw,
    };
    let model = spec.fit(&ds, &split.train_idx)?;
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        data: data.to_path_buf(),
        seed: cfg.seed,
        spec,
        split,
        transform,
        model: model.to_saved(),
    };
    write_json_doc(&file, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub row_id: u64,
    pub label: u32,
    pub prediction: u32,
}

fn load_fitted(cfg: &RunConfig) -> Result<Fitted> {
    let path = require(&cfg.model_file, "model file (--model)")?;
    Fitted::load(path, cfg.data.as_deref())
}

pub fn cmd_predict(cfg: &RunConfig) -> Result<()> {
    let fitted = load_fitted(cfg)?;
    let inputs = Inputs::resolve(cfg, &fitted)?;
    let q_ds = match &inputs {
        Inputs::External(q) => q,
        Inputs::Rows(_) => &fitted.ds,
    };
    let mut w = output(cfg)?;
    for (row_id, label, x) in inputs.items(q_ds) {
        let prediction = fitted.model.predict(&fitted.ds, x)?.label;
        write_json_line(&mut *w, &PredictionRecord { row_id, label, prediction }, cfg)?;
    }
    finish(w, cfg)
}

pub fn cmd_explain(cfg: &RunConfig) -> Result<()> {
    let fitted = load_fitted(cfg)?;
    let inputs = Inputs::resolve(cfg, &fitted)?;
    let q_ds = match &inputs {
        Inputs::External(q) => q,
        Inputs::Rows(_) => &fitted.ds,
    };
    let records: Vec<ExplanationRecord> = inputs
        .items(q_ds)
        .into_iter()
        .map(|(id, _, x)| {
            explain(&fitted.model, &fitted.ds, x, cfg.policy, cfg.m).map(|e| e.to_record(&fitted.ds, Some(id)))
        })
        .collect::<Result<_>>()?;
    let mut w = output(cfg)?;
    for r in &records {
        write_json_line(&mut *w, r, cfg)?;
    }
    finish(w, cfg)
}

/// Final line of an attribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary: AttributionSummary,
}

pub fn cmd_attribute(cfg: &RunConfig) -> Result<()> {
    cfg.attribution.validate()?;
    let fitted = load_fitted(cfg)?;
    let inputs = Inputs::resolve(cfg, &fitted)?;
    let q_ds = match &inputs {
        Inputs::External(q) => q,
        Inputs::Rows(_) => &fitted.ds,
    };
    let items = inputs.items(q_ds);
    if items.is_empty() {
        return Err(WrapError::Config("no test inputs to attribute".into()));
    }
    let queries: Vec<Query<'_>> = items.iter().map(|&(id, _, x)| Query { id, x }).collect();
    let spec = &fitted.file.spec;
    let selector = cfg.selector.unwrap_or(match spec {
        ModelSpec::Knn { .. } => Selector::Knn,
        _ => Selector::Greedy,
    });
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(WrapError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| WrapError::Config(format!("cannot start worker pool: {e}")))?;
    let train = &fitted.file.split.train_idx;
    let mut results: Vec<SubsetResult> = pool.install(|| {
        attribute_many(&fitted.ds, train, spec, selector, &queries, &cfg.attribution, cfg.verify)
    })?;
    if !cfg.timings {
        results.iter_mut().for_each(|r| r.wall_time = None);
    }
    let summary = SummaryRecord {
        summary: attribution_metrics(&results)?,
    };
    let mut w = output(cfg)?;
    for r in &results {
        write_json_line(&mut *w, r, cfg)?;
    }
    write_json_line(&mut *w, &summary, cfg)?;
    finish(w, cfg)?;
    if let Some(path) = &cfg.summary {
        let text = serde_json::to_string_pretty(&summary.summary)? + "\n";
        std::fs::write(path, text).map_err(|e| WrapError::io(path, e))?;
    }
    Ok(())
}

/// Metrics for one system, optionally against a baseline and alongside an
/// attribution summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub metrics: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<MetricReport>,
    /// Positive `z` means the system beats the baseline.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub significance: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attribution: Option<AttributionSummary>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| WrapError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| WrapError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| WrapError::Row {
            row: i,
            message: format!("{}: {e}", path.display()),
        })?);
    }
    Ok(out)
}

fn read_predictions(path: &Path) -> Result<(Vec<u32>, Vec<u32>)> {
    let records: Vec<PredictionRecord> = read_jsonl(path)?;
    Ok(records.iter().map(|r| (r.label, r.prediction)).unzip())
}

/// Reads the summary line of an attribution file.
fn read_attribution_summary(path: &Path) -> Result<AttributionSummary> {
    let file = File::open(path).map_err(|e| WrapError::io(path, e))?;
    let mut last = None;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| WrapError::io(path, e))?;
        if let Ok(s) = serde_json::from_str::<SummaryRecord>(&line) {
            last = Some(s.summary);
        }
    }
    last.ok_or_else(|| WrapError::Config(format!("{}: no summary record", path.display())))
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let path = require(&cfg.predictions, "prediction file (--predictions)")?;
    let (truth, pred) = read_predictions(path)?;
    let baseline = cfg.baseline.as_deref().map(read_predictions).transpose()?;
    let n_classes = cfg.n_classes.unwrap_or_else(|| {
        let all = truth.iter().chain(&pred);
        let extra = baseline.iter().flat_map(|(t, p)| t.iter().chain(p));
        all.chain(extra).max().map_or(1, |m| m + 1)
    });
    let metrics = classification_metrics(&truth, &pred, n_classes)?;
    let baseline = baseline
        .map(|(t, p)| classification_metrics(&t, &p, n_classes))
        .transpose()?;
    let significance = baseline.as_ref().map(|b| compare_reports(&metrics, b)).transpose()?;
    let attribution = cfg.attribution_file.as_deref().map(read_attribution_summary).transpose()?;
    write_json_doc(
        &AuditReport {
            metrics,
            baseline,
            significance,
            attribution,
        },
        cfg,
    )
}

/// Writes the 2-D PCA projection of a dataset as `id,label,pc1,pc2`.
pub fn cmd_project(cfg: &RunConfig) -> Result<()> {
    let ds = match (&cfg.data, &cfg.model_file) {
        (Some(data), None) => load_dataset(data)?,
        (_, Some(_)) => load_fitted(cfg)?.ds,
        (None, None) => return Err(WrapError::Config("missing dataset path (--data) or model file (--model)".into())),
    };
    let proj = pca2_project(&ds, cfg.seed)?;
    let mut w = output(cfg)?;
    write_projection(&ds, &proj, &mut w)?;
    finish(w, cfg)
}
