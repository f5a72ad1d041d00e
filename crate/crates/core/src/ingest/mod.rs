//! Raw tabular ingestion and the two preprocessing regimes (click-through and
//! conversion-log style) that turn a CSV into an integer-encoded [`InstanceTable`].

mod preprocess;
mod schema;
mod table;
mod vocab;

pub use preprocess::{preprocess, preprocess_ctr, preprocess_sscl, CtrOptions, DEFAULT_MIN_COUNT};
pub use schema::{ColumnKind, ColumnSpec, Delimiter, Mode, SchemaFile};
pub use table::{InstanceTable, TableMeta, Task};
pub use vocab::{ColumnVocab, VocabEntry, Vocabulary};

use std::path::Path;

use crate::error::{Error, Result};

/// A table of optional string cells, one cell per schema column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub schema: Vec<ColumnSpec>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn new(schema: Vec<ColumnSpec>, rows: Vec<Vec<Option<String>>>) -> Result<Self> {
        schema::validate(&schema)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Parse {
                    row: i,
                    message: format!("expected {} cells, found {}", schema.len(), row.len()),
                });
            }
        }
        Ok(RawTable { schema, rows })
    }

    pub fn label_column(&self) -> usize {
        self.schema
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label column")
    }

    pub fn columns_of(&self, kind: ColumnKind) -> Vec<usize> {
        self.schema
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub header: bool,
    pub delimiter: Delimiter,
    /// Cell values (after trimming) that are read as missing in addition to empty cells.
    pub na_values: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            header: false,
            delimiter: Delimiter::Comma,
            na_values: Vec::new(),
        }
    }
}

/// Reads a delimited file into a [`RawTable`]. Row indices in errors count data
/// rows from zero, excluding the header.
pub fn load_csv(path: &Path, schema: &[ColumnSpec], opts: &CsvOptions) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, opts)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    schema: &[ColumnSpec],
    opts: &CsvOptions,
) -> Result<RawTable> {
    schema::validate(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(opts.delimiter.byte())
        .from_reader(reader);

    let mut rows = Vec::new();
    let mut skip_header = opts.header;
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
            row: rows.len(),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        if skip_header {
            skip_header = false;
            if record.len() != schema.len() {
                return Err(Error::Parse {
                    row: 0,
                    message: format!(
                        "header has {} columns, schema has {}",
                        record.len(),
                        schema.len()
                    ),
                });
            }
            continue;
        }
        if record.len() != schema.len() {
            return Err(Error::Parse {
                row: rows.len(),
                message: format!("expected {} cells, found {}", schema.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .map(|cell| {
                let cell = cell.trim();
                if cell.is_empty() || opts.na_values.iter().any(|na| na == cell) {
                    None
                } else {
                    Some(cell.to_string())
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(RawTable {
        schema: schema.to_vec(),
        rows,
    })
}
