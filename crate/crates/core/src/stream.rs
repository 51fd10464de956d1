//! Instances, batches, schemas, the sliding-window forgetting mechanism,
//! and CSV ingestion/export of streams.
//!
//! Batches are consumed strictly in ascending index order; the window keeps
//! the most recent `capacity_batches` of them and its training view is their
//! concatenation. Missing numeric cells are carried as NaN and resolved by
//! the imputation preprocessor.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audit::RowId;
use crate::error::{Error, Result};

/// Marker for a missing numeric value, resolved by imputation.
pub const MISSING: f64 = f64::NAN;

/// One labeled observation. Categorical features are pre-encoded as integer
/// codes stored in the feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical { cardinality: usize },
}

/// Declared shape of a stream: feature count/kinds and class count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSchema {
    pub n_features: usize,
    pub n_classes: usize,
    pub feature_kinds: Vec<FeatureKind>,
}

impl StreamSchema {
    pub fn numeric(n_features: usize, n_classes: usize) -> Self {
        StreamSchema {
            n_features,
            n_classes,
            feature_kinds: vec![FeatureKind::Numeric; n_features],
        }
    }

    pub fn has_categorical(&self) -> bool {
        self.feature_kinds
            .iter()
            .any(|k| matches!(k, FeatureKind::Categorical { .. }))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::SchemaMismatch(format!(
                "n_classes must be >= 2, got {}",
                self.n_classes
            )));
        }
        if self.feature_kinds.len() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "{} feature kinds for {} features",
                self.feature_kinds.len(),
                self.n_features
            )));
        }
        for (i, k) in self.feature_kinds.iter().enumerate() {
            if let FeatureKind::Categorical { cardinality } = k {
                if *cardinality < 2 {
                    return Err(Error::SchemaMismatch(format!(
                        "categorical feature {i} has cardinality {cardinality} (< 2)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn check_instance(&self, inst: &Instance) -> Result<()> {
        if inst.features.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: inst.features.len(),
            });
        }
        if inst.label >= self.n_classes {
            return Err(Error::SchemaMismatch(format!(
                "label {} out of range for {} classes",
                inst.label, self.n_classes
            )));
        }
        Ok(())
    }
}

/// A chunk of consecutive instances, identified by its position in the stream.
#[derive(Debug, Clone)]
pub struct Batch {
    pub index: usize,
    pub instances: Vec<Instance>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Split a stream into equally sized batches.
///
/// A trailing partial batch shorter than half the batch size is dropped;
/// longer remainders are kept as a final shorter batch.
pub fn batchify(instances: Vec<Instance>, batch_size: usize) -> Result<Vec<Batch>> {
    if instances.is_empty() {
        return Err(Error::EmptyStream);
    }
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let mut batches = Vec::with_capacity(instances.len() / batch_size + 1);
    let mut iter = instances.into_iter().peekable();
    let mut index = 0;
    while iter.peek().is_some() {
        let chunk: Vec<Instance> = iter.by_ref().take(batch_size).collect();
        if chunk.len() * 2 < batch_size {
            break; // drop short trailing remainder
        }
        batches.push(Batch {
            index,
            instances: chunk,
        });
        index += 1;
    }
    if batches.is_empty() {
        return Err(Error::EmptyStream);
    }
    Ok(batches)
}

/// Fixed-capacity queue of the most recent batches; pushing when full evicts
/// the oldest.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity_batches: usize,
    contents: VecDeque<Batch>,
}

impl SlidingWindow {
    pub fn new(capacity_batches: usize) -> Self {
        assert!(capacity_batches >= 1, "window capacity must be >= 1");
        SlidingWindow {
            capacity_batches,
            contents: VecDeque::with_capacity(capacity_batches + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity_batches
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn batch_indices(&self) -> Vec<usize> {
        self.contents.iter().map(|b| b.index).collect()
    }

    /// Total instances currently held.
    pub fn n_instances(&self) -> usize {
        self.contents.iter().map(Batch::len).sum()
    }

    pub fn push(&mut self, batch: Batch) -> Result<()> {
        if let Some(newest) = self.contents.back() {
            if batch.index <= newest.index {
                return Err(Error::NonMonotonicBatch {
                    pushed: batch.index,
                    newest: newest.index,
                });
            }
        }
        self.contents.push_back(batch);
        if self.contents.len() > self.capacity_batches {
            self.contents.pop_front();
        }
        Ok(())
    }

    /// Concatenation of the window contents in batch order.
    pub fn training_view(&self) -> TrainView {
        let mut rows = Vec::with_capacity(self.n_instances());
        for batch in &self.contents {
            for (offset, inst) in batch.instances.iter().enumerate() {
                rows.push(Row {
                    id: (batch.index, offset),
                    instance: inst.clone(),
                });
            }
        }
        TrainView { rows }
    }

    /// View of the newest batch only — the portion of the window that
    /// arrived since a drift was flagged.
    pub fn newest_view(&self) -> TrainView {
        match self.contents.back() {
            Some(batch) => TrainView::from_batch(batch),
            None => TrainView { rows: Vec::new() },
        }
    }
}

/// One training row with its provenance in the stream.
#[derive(Debug, Clone)]
pub struct Row {
    pub id: RowId,
    pub instance: Instance,
}

/// An ordered set of training rows, each tagged with its origin so fit calls
/// can be audited.
#[derive(Debug, Clone)]
pub struct TrainView {
    pub rows: Vec<Row>,
}

impl TrainView {
    pub fn from_batch(batch: &Batch) -> Self {
        let rows = batch
            .instances
            .iter()
            .enumerate()
            .map(|(offset, inst)| Row {
                id: (batch.index, offset),
                instance: inst.clone(),
            })
            .collect();
        TrainView { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_ids(&self) -> Vec<RowId> {
        self.rows.iter().map(|r| r.id).collect()
    }

    /// Temporal split: the earliest `1 - holdout_frac` of rows for training
    /// and the most recent `holdout_frac` as holdout.
    pub fn split_holdout(&self, holdout_frac: f64) -> (TrainView, TrainView) {
        let n = self.rows.len();
        let n_holdout = ((n as f64) * holdout_frac).round() as usize;
        let n_holdout = n_holdout.clamp(1, n.saturating_sub(1).max(1));
        let cut = n - n_holdout;
        (
            TrainView {
                rows: self.rows[..cut].to_vec(),
            },
            TrainView {
                rows: self.rows[cut..].to_vec(),
            },
        )
    }
}

/// Options controlling CSV ingestion.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Name of the label column; defaults to the last column.
    pub label_column: Option<String>,
    /// Force specific columns (by header name) to be treated as categorical.
    pub categorical_columns: Vec<String>,
    /// Fix the label coding up front; any other label value is an error.
    /// When absent, label codes are assigned in order of first appearance.
    pub label_values: Option<Vec<String>>,
}

/// Read a headered CSV file into a schema and an instance sequence, in file
/// order. Non-numeric columns (and any listed in the options) are mapped to
/// stable integer codes in order of first appearance; empty numeric cells
/// become the missing marker. Label values are likewise coded in order of
/// first appearance.
pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<(StreamSchema, Vec<Instance>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(Error::EmptyStream);
    }
    let label_idx = match &options.label_column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidConfig(format!("label column {name:?} not found in header"))
        })?,
        None => headers.len() - 1,
    };
    let n_cols = headers.len();
    let mut records: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != n_cols {
            return Err(Error::RaggedRow {
                row: i + 2, // 1-based, after the header line
                expected: n_cols,
                found: rec.len(),
            });
        }
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(Error::EmptyStream);
    }

    // First pass: decide per-column kind. A feature column is numeric when
    // every non-empty cell parses as f64 and it is not forced categorical.
    let feature_cols: Vec<usize> = (0..n_cols).filter(|&c| c != label_idx).collect();
    let mut is_categorical = vec![false; n_cols];
    for &c in &feature_cols {
        let forced = options.categorical_columns.contains(&headers[c]);
        let numeric = records
            .iter()
            .all(|r| r[c].is_empty() || r[c].trim().parse::<f64>().is_ok());
        is_categorical[c] = forced || !numeric;
    }

    // Second pass: encode. Codes are frozen in order of first appearance.
    let mut cat_codes: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    let mut label_codes: Vec<String> = options.label_values.clone().unwrap_or_default();
    let labels_fixed = options.label_values.is_some();
    let mut instances = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = rec[c].trim();
            if is_categorical[c] {
                let code = match cat_codes[c].iter().position(|v| v == cell) {
                    Some(p) => p,
                    None => {
                        cat_codes[c].push(cell.to_string());
                        cat_codes[c].len() - 1
                    }
                };
                features.push(code as f64);
            } else if cell.is_empty() {
                features.push(MISSING);
            } else {
                features.push(cell.parse::<f64>().expect("checked numeric"));
            }
        }
        let cell = rec[label_idx].trim();
        let label = match label_codes.iter().position(|v| v == cell) {
            Some(p) => p,
            None if labels_fixed => {
                return Err(Error::UnknownLabel {
                    row: i + 2,
                    value: cell.to_string(),
                });
            }
            None => {
                label_codes.push(cell.to_string());
                label_codes.len() - 1
            }
        };
        instances.push(Instance { features, label });
    }

    let feature_kinds = feature_cols
        .iter()
        .map(|&c| {
            if is_categorical[c] {
                FeatureKind::Categorical {
                    cardinality: cat_codes[c].len().max(2),
                }
            } else {
                FeatureKind::Numeric
            }
        })
        .collect();
    let schema = StreamSchema {
        n_features: feature_cols.len(),
        n_classes: label_codes.len().max(2),
        feature_kinds,
    };
    schema.validate()?;
    Ok((schema, instances))
}

/// Write a stream as a headered CSV (features x0..x{d-1}, label column
/// `label`). Feature values are written with full round-trip precision.
pub fn export_csv(path: &Path, schema: &StreamSchema, instances: &[Instance]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (0..schema.n_features)
        .map(|i| format!("x{i}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for inst in instances {
        let mut cells: Vec<String> = inst
            .features
            .iter()
            .map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    format!("{v}")
                }
            })
            .collect();
        cells.push(inst.label.to_string());
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar metadata written next to generated stream files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamMeta {
    pub family: String,
    pub n_instances: usize,
    pub seed: u64,
    pub label_flip_rate: f64,
    pub schema: StreamSchema,
    /// Ground-truth drift midpoints (instance indices).
    pub drift_positions: Vec<usize>,
    pub drift: toml::Value,
}

impl StreamMeta {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Toml(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Toml(e.to_string()))
    }
}
