//! File conventions shared by the commands: artifact names, atomic writes,
//! config hashes and loaders that name the missing path.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fingerprint;
use crate::ingest::InstanceTable;

pub const TABLE_CSV: &str = "table.csv";
pub const TABLE_META: &str = "table.meta.json";
pub const VOCAB_JSON: &str = "vocab.json";
pub const BAGS_SUFFIX: &str = ".bags.jsonl";
pub const METRICS_JSON_SUFFIX: &str = ".metrics.json";
pub const METRICS_CSV_SUFFIX: &str = ".metrics.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const FILTER_SUMMARY: &str = "filter_summary.csv";
pub const RUN_SUFFIX: &str = ".run.json";
pub const SUMMARY_SUFFIX: &str = ".summary.csv";

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Serializes rows with the csv crate and writes them atomically.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Validation(format!("csv encoding: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|s| s.as_ref())).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Validation(format!("csv encoding: {e}")))?;
    write_atomic(path, &bytes)
}

/// Hex FNV-1a of the compact JSON encoding of `params`.
pub fn config_hash<T: Serialize>(params: &T) -> Result<String> {
    let bytes = serde_json::to_vec(params)?;
    Ok(fingerprint::to_hex(fingerprint::fnv1a64(&bytes)))
}

pub fn file_fingerprint(path: &Path) -> Result<String> {
    let bytes = read_artifact(path)?;
    Ok(fingerprint::to_hex(fingerprint::fnv1a64(&bytes)))
}

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

pub fn read_artifact(path: &Path) -> Result<Vec<u8>> {
    require(path)?;
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_table(dir: &Path) -> Result<InstanceTable> {
    let csv = dir.join(TABLE_CSV);
    let meta = dir.join(TABLE_META);
    require(&csv)?;
    require(&meta)?;
    InstanceTable::load(&csv, &meta)
}

/// Bag files named by `path`: the file itself, or every `*.bags.jsonl` in a directory,
/// sorted by name.
pub fn bag_files(path: &Path) -> Result<Vec<PathBuf>> {
    require(path)?;
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.is_file() && name_of(&p).ends_with(BAGS_SUFFIX) {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::MissingArtifact(path.join(format!("*{BAGS_SUFFIX}"))));
    }
    Ok(out)
}

/// Files in `dir` whose names end with `suffix`, sorted.
pub fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    require(dir)?;
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && name_of(&p).ends_with(suffix) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn name_of(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Dataset id of a bag file: its name without the `.bags.jsonl` suffix.
pub fn dataset_id(bag_file: &Path) -> String {
    let name = name_of(bag_file);
    name.strip_suffix(BAGS_SUFFIX).unwrap_or(&name).to_string()
}

/// Formats a float for CSV output; non-finite values get fixed spellings.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        v.to_string()
    }
}

/// Reads a CSV with a header into a vector of `column -> cell` maps.
pub fn read_csv_records(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bytes = read_artifact(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { row: i, message: e.to_string() })?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        Error::Validation(format!("{} has no column {name}", path.display()))
    })
}
