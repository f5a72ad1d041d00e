use std::collections::HashMap;

use super::{ColumnKind, ColumnVocab, InstanceTable, Mode, RawTable, SchemaFile, Task, VocabEntry, Vocabulary};
use crate::error::{Error, Result};

/// Values occurring at most this many times are merged in the conversion-log regime.
pub const DEFAULT_MIN_COUNT: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct CtrOptions {
    /// Base of the logarithm in `int(log(x)^2)`.
    pub log_base: f64,
}

impl Default for CtrOptions {
    fn default() -> Self {
        CtrOptions {
            log_base: std::f64::consts::E,
        }
    }
}

pub fn preprocess(raw: &RawTable, schema: &SchemaFile) -> Result<(InstanceTable, Vocabulary)> {
    match schema.mode {
        Mode::Ctr => preprocess_ctr(
            raw,
            CtrOptions {
                log_base: schema.log_base.unwrap_or(std::f64::consts::E),
            },
        ),
        Mode::Sscl => preprocess_sscl(raw, schema.min_count.unwrap_or(DEFAULT_MIN_COUNT)),
    }
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        message: format!("column {column}: {cell:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("column {column}: non-finite value {cell:?}"),
        });
    }
    Ok(v)
}

fn log_squared(x: f64, base: f64) -> f64 {
    if x > 2.0 {
        let l = x.ln() / base.ln();
        (l * l).trunc()
    } else {
        x
    }
}

/// Click-regime preprocessing: binary labels, `int(log(x)^2)` for `x > 2`, per-column
/// shift to a zero minimum, first-appearance categorical codes with missing as its own code.
pub fn preprocess_ctr(raw: &RawTable, opts: CtrOptions) -> Result<(InstanceTable, Vocabulary)> {
    if !(opts.log_base > 0.0 && opts.log_base != 1.0) {
        return Err(Error::invalid(format!("log base {} is not usable", opts.log_base)));
    }
    let label_col = raw.label_column();
    let label_name = &raw.schema[label_col].name;
    let mut labels = Vec::with_capacity(raw.rows.len());
    for (r, row) in raw.rows.iter().enumerate() {
        let cell = row[label_col].as_deref().ok_or_else(|| {
            Error::Validation(format!("row {r}: missing label in click regime"))
        })?;
        let y = parse_number(cell, r, label_name)?;
        if y != 0.0 && y != 1.0 {
            return Err(Error::Validation(format!("row {r}: label {cell:?} is not 0 or 1")));
        }
        labels.push(y);
    }

    let num_cols = raw.columns_of(ColumnKind::Numerical);
    let m = raw.rows.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(num_cols.len());
    for &c in &num_cols {
        let name = &raw.schema[c].name;
        let mut col = Vec::with_capacity(m);
        for (r, row) in raw.rows.iter().enumerate() {
            let x = match row[c].as_deref() {
                None => 0.0,
                Some(cell) => {
                    let x = parse_number(cell, r, name)?;
                    if x.fract() != 0.0 {
                        return Err(Error::Validation(format!(
                            "row {r}: column {name} value {cell:?} is not an integer"
                        )));
                    }
                    x
                }
            };
            col.push(log_squared(x, opts.log_base));
        }
        if let Some(min) = col.iter().copied().reduce(f64::min) {
            for v in &mut col {
                *v -= min;
            }
        }
        columns.push(col);
    }

    let cat_cols = raw.columns_of(ColumnKind::Categorical);
    let mut vocab_cols = Vec::with_capacity(cat_cols.len());
    let mut codes: Vec<Vec<u32>> = Vec::with_capacity(cat_cols.len());
    for &c in &cat_cols {
        let mut entries = Vec::new();
        let mut lookup: HashMap<Option<&str>, u32> = HashMap::new();
        let mut col = Vec::with_capacity(m);
        for row in &raw.rows {
            let key = row[c].as_deref();
            let next = lookup.len() as u32;
            let code = *lookup.entry(key).or_insert_with(|| {
                entries.push(match key {
                    Some(s) => VocabEntry::Value(s.to_string()),
                    None => VocabEntry::Missing,
                });
                next
            });
            col.push(code);
        }
        vocab_cols.push(ColumnVocab::new(raw.schema[c].name.clone(), entries, Vec::new()));
        codes.push(col);
    }

    assemble(raw, Task::Binary, &cat_cols, &num_cols, codes, columns, labels, vocab_cols)
}

/// Conversion-log preprocessing: drop rows without a label, merge categorical values seen
/// at most `min_count` times (and missing cells) into one shared code, mean-impute numericals.
pub fn preprocess_sscl(raw: &RawTable, min_count: usize) -> Result<(InstanceTable, Vocabulary)> {
    let label_col = raw.label_column();
    let label_name = &raw.schema[label_col].name;
    let mut kept = Vec::new();
    let mut labels = Vec::new();
    for (r, row) in raw.rows.iter().enumerate() {
        if let Some(cell) = row[label_col].as_deref() {
            let y = parse_number(cell, r, label_name)?;
            if y < 0.0 {
                return Err(Error::Validation(format!("row {r}: negative label {cell:?}")));
            }
            kept.push(r);
            labels.push(y);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyTable("every row is missing its label".into()));
    }

    let num_cols = raw.columns_of(ColumnKind::Numerical);
    let mut columns = Vec::with_capacity(num_cols.len());
    for &c in &num_cols {
        let name = &raw.schema[c].name;
        let mut cells = Vec::with_capacity(kept.len());
        let (mut sum, mut count) = (0.0, 0usize);
        for &r in &kept {
            let v = match raw.rows[r][c].as_deref() {
                Some(cell) => Some(parse_number(cell, r, name)?),
                None => None,
            };
            if let Some(x) = v {
                sum += x;
                count += 1;
            }
            cells.push(v);
        }
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        columns.push(cells.into_iter().map(|v| v.unwrap_or(mean)).collect::<Vec<_>>());
    }

    let cat_cols = raw.columns_of(ColumnKind::Categorical);
    let mut vocab_cols = Vec::with_capacity(cat_cols.len());
    let mut codes = Vec::with_capacity(cat_cols.len());
    for &c in &cat_cols {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for &r in &kept {
            if let Some(s) = raw.rows[r][c].as_deref() {
                *freq.entry(s).or_default() += 1;
            }
        }
        let mut entries = vec![VocabEntry::Merged];
        let mut lookup: HashMap<&str, u32> = HashMap::new();
        let mut col = Vec::with_capacity(kept.len());
        for &r in &kept {
            let code = match raw.rows[r][c].as_deref() {
                Some(s) if freq[s] > min_count => {
                    let next = entries.len() as u32;
                    *lookup.entry(s).or_insert_with(|| {
                        entries.push(VocabEntry::Value(s.to_string()));
                        next
                    })
                }
                _ => 0,
            };
            col.push(code);
        }
        let mut merged: Vec<String> = freq
            .iter()
            .filter(|(_, &n)| n <= min_count)
            .map(|(s, _)| s.to_string())
            .collect();
        merged.sort();
        vocab_cols.push(ColumnVocab::new(raw.schema[c].name.clone(), entries, merged));
        codes.push(col);
    }

    assemble(raw, Task::Regression, &cat_cols, &num_cols, codes, columns, labels, vocab_cols)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    raw: &RawTable,
    task: Task,
    cat_cols: &[usize],
    num_cols: &[usize],
    codes: Vec<Vec<u32>>,
    columns: Vec<Vec<f64>>,
    labels: Vec<f64>,
    vocab_cols: Vec<ColumnVocab>,
) -> Result<(InstanceTable, Vocabulary)> {
    let m = labels.len();
    let mut cat = Vec::with_capacity(m * cat_cols.len());
    let mut num = Vec::with_capacity(m * num_cols.len());
    for i in 0..m {
        cat.extend(codes.iter().map(|col| col[i]));
        num.extend(columns.iter().map(|col| col[i]));
    }
    let vocab = Vocabulary { columns: vocab_cols };
    let table = InstanceTable::new(
        task,
        cat_cols.iter().map(|&c| raw.schema[c].name.clone()).collect(),
        num_cols.iter().map(|&c| raw.schema[c].name.clone()).collect(),
        raw.schema[raw.label_column()].name.clone(),
        vocab.sizes(),
        cat,
        num,
        labels,
    )?;
    Ok((table, vocab))
}
