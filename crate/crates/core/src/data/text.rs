//! CSV encoding: header `id,label,f0,...,f{d-1}[,text]`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! round trip reproduces every f32 bit pattern. `n_classes` is not stored and
//! is inferred as `max(label) + 1` on read.

use std::io::Read;

use super::EmbeddingDataset;
use crate::error::{Result, WrapError};

pub(super) fn read_csv(reader: impl Read) -> Result<EmbeddingDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 2 || cols[0] != "id" || cols[1] != "label" {
        return Err(WrapError::Format {
            offset: 0,
            message: "csv header must start with id,label".into(),
        });
    }
    let has_text = cols.last() == Some(&"text");
    let n_dims = cols.len() - 2 - usize::from(has_text);
    for (j, name) in cols[2..2 + n_dims].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(WrapError::Format {
                offset: 0,
                message: format!("expected column f{j}, found {name:?}"),
            });
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    let mut texts = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte());
        if record.len() != cols.len() {
            return Err(WrapError::Format {
                offset,
                message: format!("row {row}: {} fields, header has {}", record.len(), cols.len()),
            });
        }
        let bad = |what: &str, v: &str| WrapError::Row {
            row,
            message: format!("cannot parse {what} {v:?} (byte {offset})"),
        };
        ids.push(record[0].trim().parse::<u64>().map_err(|_| bad("id", &record[0]))?);
        labels.push(record[1].trim().parse::<u32>().map_err(|_| bad("label", &record[1]))?);
        for column in 0..n_dims {
            let field = &record[2 + column];
            let v: f32 = field.trim().parse().map_err(|_| bad("feature", field))?;
            if !v.is_finite() {
                return Err(WrapError::NonFinite { row, column, value: v });
            }
            features.push(v);
        }
        if has_text {
            texts.push(record[cols.len() - 1].to_owned());
        }
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    EmbeddingDataset::new(
        features,
        n_dims,
        labels,
        ids,
        n_classes,
        has_text.then_some(texts),
    )
}

pub(super) fn write_csv(ds: &EmbeddingDataset) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..ds.n_dims()).map(|j| format!("f{j}")));
    if ds.texts().is_some() {
        header.push("text".into());
    }
    wtr.write_record(&header)?;
    for i in 0..ds.n_rows() {
        let mut rec = vec![ds.row_id(i).to_string(), ds.label(i).to_string()];
        rec.extend(ds.row(i).iter().map(|v| v.to_string()));
        if let Some(t) = ds.text(i) {
            rec.push(t.to_owned());
        }
        wtr.write_record(&rec)?;
    }
    wtr.into_inner()
        .map_err(|e| WrapError::io("<csv buffer>", e.into_error()))
}
