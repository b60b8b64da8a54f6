//! The WBX1 binary interchange format.
//!
//! ```text
//! offset  size          field
//! 0       4             magic "WBX1"
//! 4       4             n_rows      (u32 LE)
//! 8       4             n_dims      (u32 LE)
//! 12      4             n_classes   (u32 LE)
//! 16      4             flags       (u32 LE, bit 0 = texts present)
//! 20      4*n*d         features, row-major f32 LE
//! ...     4*n           labels (u32 LE)
//! ...     8*n           row ids (u64 LE)
//! ...     variable      if flagged: per row, u32 LE byte length + UTF-8 bytes
//! ```
//!
//! All other flag bits must be zero. Trailing bytes are rejected.

use super::EmbeddingDataset;
use crate::error::{Result, WrapError};

pub const MAGIC: &[u8; 4] = b"WBX1";
pub const HEADER_LEN: usize = 20;
pub const FLAG_TEXTS: u32 = 1;

/// Exact encoded size of a dataset without texts.
pub fn encoded_len(n_rows: usize, n_dims: usize) -> usize {
    HEADER_LEN + 4 * n_rows * n_dims + 4 * n_rows + 8 * n_rows
}

pub fn encode(ds: &EmbeddingDataset) -> Vec<u8> {
    let n = ds.n_rows();
    let mut out = Vec::with_capacity(encoded_len(n, ds.n_dims()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(ds.n_dims() as u32).to_le_bytes());
    out.extend_from_slice(&ds.n_classes().to_le_bytes());
    let flags = if ds.texts().is_some() { FLAG_TEXTS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in ds.features() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in ds.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for id in ds.row_ids() {
        out.extend_from_slice(&id.to_le_bytes());
    }
    if let Some(texts) = ds.texts() {
        for t in texts {
            out.extend_from_slice(&(t.len() as u32).to_le_bytes());
            out.extend_from_slice(t.as_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(slice)
            }
            None => Err(WrapError::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated {what}: need {len} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingDataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(WrapError::Format {
            offset: 0,
            message: format!("bad magic {magic:?}, expected \"WBX1\""),
        });
    }
    let n_rows = cur.u32("n_rows")? as usize;
    let n_dims = cur.u32("n_dims")? as usize;
    let n_classes = cur.u32("n_classes")?;
    let flags = cur.u32("flags")?;
    if flags & !FLAG_TEXTS != 0 {
        return Err(WrapError::Format {
            offset: 16,
            message: format!("unknown flag bits {flags:#x}"),
        });
    }
    if n_rows > 0 && n_classes == 0 {
        return Err(WrapError::Format {
            offset: 12,
            message: "n_classes is zero for a non-empty dataset".into(),
        });
    }
    // Size the fixed sections before allocating anything from header values.
    let fixed = (n_rows as u128) * (n_dims as u128) * 4 + (n_rows as u128) * 12;
    let remaining = (bytes.len() - HEADER_LEN) as u128;
    if fixed > remaining {
        return Err(WrapError::Format {
            offset: HEADER_LEN as u64,
            message: format!("header declares {fixed} data bytes but only {remaining} remain"),
        });
    }

    let feature_start = cur.pos;
    let raw = cur.take(4 * n_rows * n_dims, "features")?;
    let mut features = Vec::with_capacity(n_rows * n_dims);
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let row = i / n_dims;
            return Err(WrapError::Format {
                offset: (feature_start + 4 * i) as u64,
                message: format!("row {row}, column {}: non-finite value {v}", i % n_dims),
            });
        }
        features.push(v);
    }

    let label_start = cur.pos;
    let raw = cur.take(4 * n_rows, "labels")?;
    let mut labels = Vec::with_capacity(n_rows);
    for (row, chunk) in raw.chunks_exact(4).enumerate() {
        let label = u32::from_le_bytes(chunk.try_into().unwrap());
        if label >= n_classes {
            return Err(WrapError::Format {
                offset: (label_start + 4 * row) as u64,
                message: format!("row {row}: label {label} out of range for {n_classes} classes"),
            });
        }
        labels.push(label);
    }

    let raw = cur.take(8 * n_rows, "row ids")?;
    let row_ids: Vec<u64> = raw
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let texts = if flags & FLAG_TEXTS != 0 {
        let mut texts = Vec::with_capacity(n_rows);
        for row in 0..n_rows {
            let len = cur.u32("text length")? as usize;
            let start = cur.pos;
            let raw = cur.take(len, "text")?;
            let s = std::str::from_utf8(raw).map_err(|e| WrapError::Format {
                offset: (start + e.valid_up_to()) as u64,
                message: format!("row {row}: invalid UTF-8 in text"),
            })?;
            texts.push(s.to_owned());
        }
        Some(texts)
    } else {
        None
    };

    if cur.pos != bytes.len() {
        return Err(WrapError::Format {
            offset: cur.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - cur.pos),
        });
    }

    EmbeddingDataset::new(features, n_dims, labels, row_ids, n_classes, texts)
}
