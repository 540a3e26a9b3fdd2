use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IndexError, Vector, VectorIndex};

pub const INDEX_FORMAT: &str = "convsales-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    id: String,
    v: Vector,
}

/// Line-delimited index snapshot: a header with the dimension, then one
/// `{id, v}` row per entry in index order.
pub fn write_index(path: &Path, index: &VectorIndex) -> Result<(), IndexError> {
    let io = |e: std::io::Error| IndexError::Snapshot(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    let header = Header {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        dim: index.dim(),
        count: index.len(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).unwrap()).map_err(io)?;
    for (id, v) in index.entries() {
        let row = Row {
            id: id.to_string(),
            v: v.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&row).unwrap()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_index(path: &Path) -> Result<VectorIndex, IndexError> {
    let text = fs::read_to_string(path)
        .map_err(|e| IndexError::Snapshot(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Header = lines
        .next()
        .and_then(|l| serde_json::from_str(l).ok())
        .ok_or_else(|| IndexError::Snapshot("missing header".into()))?;
    if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
        return Err(IndexError::Snapshot(format!(
            "unsupported index {} v{}",
            header.format, header.version
        )));
    }
    let mut entries = Vec::with_capacity(header.count);
    for line in lines {
        let row: Row =
            serde_json::from_str(line).map_err(|e| IndexError::Snapshot(e.to_string()))?;
        if row.v.dim() != header.dim {
            return Err(IndexError::DimMismatch {
                expected: header.dim,
                found: row.v.dim(),
            });
        }
        Vector::new(row.v.values().to_vec())?;
        entries.push((row.id, row.v));
    }
    if entries.len() != header.count {
        return Err(IndexError::Snapshot(format!(
            "header declares {} rows, found {}",
            header.count,
            entries.len()
        )));
    }
    VectorIndex::build(entries)
}
