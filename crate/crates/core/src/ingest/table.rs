use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{Error, Result};
use crate::fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Labels in {0, 1}; sigmoid head, AUC evaluation.
    Binary,
    /// Non-negative real labels; identity head, MSE evaluation.
    Regression,
}

/// Fully encoded instances: categorical codes, numerical values and one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTable {
    task: Task,
    cat_names: Vec<String>,
    num_names: Vec<String>,
    label_name: String,
    vocab_sizes: Vec<usize>,
    cat: Vec<u32>,
    num: Vec<f64>,
    labels: Vec<f64>,
}

impl InstanceTable {
    /// `cat` and `num` are row-major (`m × n_cat`, `m × n_num`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        task: Task,
        cat_names: Vec<String>,
        num_names: Vec<String>,
        label_name: String,
        vocab_sizes: Vec<usize>,
        cat: Vec<u32>,
        num: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let m = labels.len();
        if vocab_sizes.len() != cat_names.len() {
            return Err(Error::Validation("one vocabulary size per categorical column".into()));
        }
        if cat.len() != m * cat_names.len() || num.len() != m * num_names.len() {
            return Err(Error::Validation("cell matrix shape does not match row count".into()));
        }
        let n_cat = cat_names.len();
        for (i, &code) in cat.iter().enumerate() {
            let col = i % n_cat.max(1);
            if code as usize >= vocab_sizes[col] {
                return Err(Error::Validation(format!(
                    "row {} column {}: code {code} outside vocabulary of size {}",
                    i / n_cat,
                    cat_names[col],
                    vocab_sizes[col]
                )));
            }
        }
        if num.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite numerical value".into()));
        }
        for (i, &y) in labels.iter().enumerate() {
            let ok = match task {
                Task::Binary => y == 0.0 || y == 1.0,
                Task::Regression => y.is_finite() && y >= 0.0,
            };
            if !ok {
                return Err(Error::Validation(format!("row {i}: label {y} invalid for {task:?} task")));
            }
        }
        Ok(InstanceTable {
            task,
            cat_names,
            num_names,
            label_name,
            vocab_sizes,
            cat,
            num,
            labels,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_cat(&self) -> usize {
        self.cat_names.len()
    }

    pub fn n_num(&self) -> usize {
        self.num_names.len()
    }

    pub fn cat_names(&self) -> &[String] {
        &self.cat_names
    }

    pub fn num_names(&self) -> &[String] {
        &self.num_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn vocab_sizes(&self) -> &[usize] {
        &self.vocab_sizes
    }

    pub fn cat_row(&self, i: usize) -> &[u32] {
        let n = self.n_cat();
        &self.cat[i * n..(i + 1) * n]
    }

    pub fn num_row(&self, i: usize) -> &[f64] {
        let n = self.n_num();
        &self.num[i * n..(i + 1) * n]
    }

    pub fn code(&self, i: usize, col: usize) -> u32 {
        self.cat[i * self.n_cat() + col]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn num_column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.num[i * self.n_num() + col])
    }

    pub fn cat_index(&self, name: &str) -> Option<usize> {
        self.cat_names.iter().position(|n| n == name)
    }

    /// Canonical CSV encoding; the table fingerprint is computed over these bytes.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        let header: Vec<&str> = self
            .cat_names
            .iter()
            .chain(self.num_names.iter())
            .map(String::as_str)
            .chain(std::iter::once(self.label_name.as_str()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let mut first = true;
            for &c in self.cat_row(i) {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{c}").unwrap();
            }
            for &v in self.num_row(i) {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{v}").unwrap();
            }
            if !first {
                out.push(',');
            }
            write!(out, "{}", self.labels[i]).unwrap();
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint::fnv1a64(&self.to_csv_bytes())
    }

    pub fn meta(&self, mode: Option<Mode>) -> TableMeta {
        TableMeta {
            mode,
            task: self.task,
            m: self.len(),
            categorical: self.cat_names.clone(),
            numerical: self.num_names.clone(),
            label: self.label_name.clone(),
            vocab_sizes: self.vocab_sizes.clone(),
            fingerprint: fingerprint::to_hex(self.fingerprint()),
            config_hash: None,
        }
    }

    /// Parses the canonical CSV encoding back, using the metadata for column roles.
    pub fn from_csv_bytes(bytes: &[u8], meta: &TableMeta) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?;
        let mut lines = text.lines();
        let n_cat = meta.categorical.len();
        let n_num = meta.numerical.len();
        let width = n_cat + n_num + 1;
        match lines.next() {
            Some(h) if h.split(',').count() == width => {}
            _ => {
                return Err(Error::Parse {
                    row: 0,
                    message: "encoded table header does not match metadata".into(),
                })
            }
        }
        let mut cat = Vec::with_capacity(meta.m * n_cat);
        let mut num = Vec::with_capacity(meta.m * n_num);
        let mut labels = Vec::with_capacity(meta.m);
        for (row, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {width} cells, found {}", cells.len()),
                });
            }
            let bad = |message: String| Error::Parse { row, message };
            for c in &cells[..n_cat] {
                cat.push(c.parse::<u32>().map_err(|e| bad(format!("code {c:?}: {e}")))?);
            }
            for c in &cells[n_cat..n_cat + n_num] {
                num.push(c.parse::<f64>().map_err(|e| bad(format!("value {c:?}: {e}")))?);
            }
            let y = cells[width - 1];
            labels.push(y.parse::<f64>().map_err(|e| bad(format!("label {y:?}: {e}")))?);
        }
        if labels.len() != meta.m {
            return Err(Error::Validation(format!(
                "metadata declares {} rows, file has {}",
                meta.m,
                labels.len()
            )));
        }
        InstanceTable::new(
            meta.task,
            meta.categorical.clone(),
            meta.numerical.clone(),
            meta.label.clone(),
            meta.vocab_sizes.clone(),
            cat,
            num,
            labels,
        )
    }

    /// Loads `table.csv` + `table.meta.json` and checks the stored fingerprint.
    pub fn load(csv_path: &Path, meta_path: &Path) -> Result<Self> {
        let meta_text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: TableMeta = serde_json::from_str(&meta_text)?;
        let bytes = std::fs::read(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let actual = fingerprint::to_hex(fingerprint::fnv1a64(&bytes));
        if actual != meta.fingerprint {
            return Err(Error::Provenance(format!(
                "{} has fingerprint {actual}, metadata records {}",
                csv_path.display(),
                meta.fingerprint
            )));
        }
        InstanceTable::from_csv_bytes(&bytes, &meta)
    }
}

/// JSON metadata written next to an encoded table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub mode: Option<Mode>,
    pub task: Task,
    pub m: usize,
    pub categorical: Vec<String>,
    pub numerical: Vec<String>,
    pub label: String,
    pub vocab_sizes: Vec<usize>,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}
