use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub position: usize,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, position: usize) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            position,
        }
    }
}

/// Which preprocessing regime applies to a raw table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Binary click labels, log-squared numerical transform.
    Ctr,
    /// Real-valued conversion labels, infrequent-category merging, mean imputation.
    Sscl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
}

impl Delimiter {
    pub fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: ColumnKind,
}

/// The JSON sidecar describing a raw input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<SchemaColumn>,
    pub mode: Mode,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub delimiter: Delimiter,
    #[serde(default)]
    pub na_values: Vec<String>,
    /// Infrequent-value threshold for the conversion-log regime.
    #[serde(default)]
    pub min_count: Option<usize>,
    /// Base of the logarithm in the click regime's numerical transform; `e` when absent.
    #[serde(default)]
    pub log_base: Option<f64>,
}

impl SchemaFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: SchemaFile = serde_json::from_str(&text)?;
        validate(&schema.column_specs())?;
        Ok(schema)
    }

    pub fn column_specs(&self) -> Vec<ColumnSpec> {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| ColumnSpec::new(c.name.clone(), c.kind, i))
            .collect()
    }
}

pub(crate) fn validate(schema: &[ColumnSpec]) -> Result<()> {
    let labels = schema.iter().filter(|c| c.kind == ColumnKind::Label).count();
    if labels != 1 {
        return Err(Error::Validation(format!(
            "schema must have exactly one label column, found {labels}"
        )));
    }
    let mut seen = HashSet::new();
    for c in schema {
        if !seen.insert(c.position) {
            return Err(Error::Validation(format!("duplicate column position {}", c.position)));
        }
    }
    let mut names = HashSet::new();
    for c in schema {
        if !names.insert(c.name.as_str()) {
            return Err(Error::Validation(format!("duplicate column name {}", c.name)));
        }
    }
    Ok(())
}
