//! JSON-lines bag files: a header record followed by one record per bag.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bag, BagCollection, FilterRecord, Provenance};
use crate::error::{Error, Result};
use crate::ingest::InstanceTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagFileHeader {
    pub provenance: Provenance,
    pub filter: Option<FilterRecord>,
    pub m: usize,
    pub table_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagRecord {
    pub id: usize,
    pub members: Vec<usize>,
    pub label_sum: f64,
}

/// Serializes `coll` as JSON lines into `out`.
pub fn write_bag_file<W: Write>(
    out: &mut W,
    coll: &BagCollection,
    table: &InstanceTable,
    config_hash: Option<String>,
) -> Result<()> {
    let header = BagFileHeader {
        provenance: coll.provenance.clone(),
        filter: coll.filter,
        m: table.len(),
        table_fingerprint: crate::fingerprint::to_hex(table.fingerprint()),
        config_hash,
    };
    let io = |e| Error::io("<bag file>", e);
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for (id, bag) in coll.bags.iter().enumerate() {
        let rec = BagRecord {
            id,
            members: bag.members().to_vec(),
            label_sum: bag.label_sum(),
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

/// Reads a bag file and checks it against `table`: fingerprint, row count, member
/// ranges, disjointness and label sums.
pub fn read_bag_file(path: &Path, table: &InstanceTable) -> Result<(BagFileHeader, BagCollection)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::Parse { row: 0, message: "empty bag file".into() }),
    };
    let header: BagFileHeader = serde_json::from_str(&first)?;
    let fp = crate::fingerprint::to_hex(table.fingerprint());
    if header.table_fingerprint != fp {
        return Err(Error::Provenance(format!(
            "bag file {} was built from table {}, current table is {fp}",
            path.display(),
            header.table_fingerprint
        )));
    }
    if header.m != table.len() {
        return Err(Error::Provenance(format!(
            "bag file records m = {}, table has {} rows",
            header.m,
            table.len()
        )));
    }
    let mut bags = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BagRecord = serde_json::from_str(&line)?;
        if rec.id != bags.len() {
            return Err(Error::Parse {
                row: row + 1,
                message: format!("bag id {} out of sequence", rec.id),
            });
        }
        let bag = Bag::from_sorted(rec.members, table.labels())
            .map_err(|e| Error::Parse { row: row + 1, message: e.to_string() })?;
        if bag.label_sum() != rec.label_sum {
            return Err(Error::Validation(format!(
                "bag {}: stored label sum {} differs from recomputed {}",
                rec.id,
                rec.label_sum,
                bag.label_sum()
            )));
        }
        bags.push(bag);
    }
    let coll = BagCollection {
        bags,
        provenance: header.provenance.clone(),
        filter: header.filter,
    };
    coll.check_disjoint()?;
    Ok((header, coll))
}
