use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CatalogError, IngestStats, Interaction, Item};

pub const SNAPSHOT_FORMAT: &str = "convsales-catalog";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    items: usize,
    interactions: usize,
    #[serde(default)]
    stats: Option<IngestStats>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Item(Item),
    Interaction(Interaction),
}

/// Writes a self-contained catalog snapshot: a header line, then items in id
/// order, then interactions in the order given.
pub fn write_snapshot(
    path: &Path,
    items: &[Item],
    interactions: &[Interaction],
    stats: Option<&IngestStats>,
) -> Result<(), CatalogError> {
    let io = |source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut sorted: Vec<&Item> = items.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let file = fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    let header = Header {
        format: SNAPSHOT_FORMAT.into(),
        version: SNAPSHOT_VERSION,
        items: items.len(),
        interactions: interactions.len(),
        stats: stats.cloned(),
    };
    writeln!(w, "{}", line(&header)).map_err(io)?;
    for item in sorted {
        writeln!(w, "{}", line(&Record::Item(item.clone()))).map_err(io)?;
    }
    for x in interactions {
        writeln!(w, "{}", line(&Record::Interaction(x.clone()))).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("snapshot records serialize")
}

pub fn read_snapshot(path: &Path) -> Result<(Vec<Item>, Vec<Interaction>), CatalogError> {
    let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| CatalogError::Snapshot("empty snapshot".into()))?;
    let header: Header = serde_json::from_str(first)
        .map_err(|e| CatalogError::Snapshot(format!("bad header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT || header.version != SNAPSHOT_VERSION {
        return Err(CatalogError::Snapshot(format!(
            "unsupported snapshot {} v{}",
            header.format, header.version
        )));
    }
    let mut items = Vec::with_capacity(header.items);
    let mut interactions = Vec::with_capacity(header.interactions);
    for (n, line) in lines {
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| CatalogError::Snapshot(format!("line {}: {e}", n + 1)))?;
        match rec {
            Record::Item(i) => items.push(i),
            Record::Interaction(x) => interactions.push(x),
        }
    }
    if items.len() != header.items || interactions.len() != header.interactions {
        return Err(CatalogError::Snapshot(format!(
            "header declares {} items / {} interactions, found {} / {}",
            header.items,
            header.interactions,
            items.len(),
            interactions.len()
        )));
    }
    Ok((items, interactions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::item;

    #[test]
    fn snapshot_roundtrip_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        let items = vec![item("b", &["X"], 2.5), item("a", &["X", "Y"], 1.25)];
        let xs = vec![Interaction {
            user_id: "u".into(),
            item_id: "a".into(),
            rating: 3,
            review_title: "t".into(),
            review_body: "ü body".into(),
            timestamp: 9,
        }];
        write_snapshot(&p, &items, &xs, None).unwrap();
        let (items2, xs2) = read_snapshot(&p).unwrap();
        assert_eq!(items2[0].id, "a");
        assert_eq!(xs2, xs);
        let first = fs::read(&p).unwrap();
        write_snapshot(&p, &items2, &xs2, None).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn rejects_foreign_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(&p, "{\"format\":\"other\",\"version\":1,\"items\":0,\"interactions\":0}\n").unwrap();
        assert!(matches!(read_snapshot(&p), Err(CatalogError::Snapshot(_))));
    }
}
