use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// What a categorical code stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabEntry {
    Value(String),
    /// Missing cell (click regime keeps it as its own category).
    Missing,
    /// Shared bucket of infrequent values and missing cells (conversion-log regime).
    Merged,
}

/// Code assignment for one categorical column. Codes are the indices of `entries`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnVocab {
    pub name: String,
    pub entries: Vec<VocabEntry>,
    /// Raw values folded into the [`VocabEntry::Merged`] bucket, sorted.
    #[serde(default)]
    pub merged_values: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl PartialEq for ColumnVocab {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.entries == other.entries
            && self.merged_values == other.merged_values
    }
}

impl ColumnVocab {
    pub fn new(name: impl Into<String>, entries: Vec<VocabEntry>, merged_values: Vec<String>) -> Self {
        let mut v = ColumnVocab {
            name: name.into(),
            entries,
            merged_values,
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index.clear();
        for (code, e) in self.entries.iter().enumerate() {
            if let VocabEntry::Value(s) = e {
                self.index.insert(s.clone(), code as u32);
            }
        }
        if let Some(merged) = self.merged_code() {
            for s in &self.merged_values {
                self.index.insert(s.clone(), merged);
            }
        }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn merged_code(&self) -> Option<u32> {
        self.entries
            .iter()
            .position(|e| *e == VocabEntry::Merged)
            .map(|p| p as u32)
    }

    pub fn missing_code(&self) -> Option<u32> {
        self.entries
            .iter()
            .position(|e| *e == VocabEntry::Missing)
            .or_else(|| self.entries.iter().position(|e| *e == VocabEntry::Merged))
            .map(|p| p as u32)
    }

    /// Code of a raw cell, `None` if the value was never seen.
    pub fn encode(&self, raw: Option<&str>) -> Option<u32> {
        match raw {
            None => self.missing_code(),
            Some(s) => self.index.get(s).copied(),
        }
    }

    pub fn decode(&self, code: u32) -> Option<&VocabEntry> {
        self.entries.get(code as usize)
    }

    pub fn encode_entry(&self, entry: &VocabEntry) -> Option<u32> {
        match entry {
            VocabEntry::Value(s) => self.encode(Some(s)),
            VocabEntry::Missing => self
                .entries
                .iter()
                .position(|e| *e == VocabEntry::Missing)
                .map(|p| p as u32),
            VocabEntry::Merged => self.merged_code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub columns: Vec<ColumnVocab>,
}

impl Vocabulary {
    pub fn sizes(&self) -> Vec<usize> {
        self.columns.iter().map(ColumnVocab::size).collect()
    }

    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        let mut v: Vocabulary = serde_json::from_str(text)?;
        for c in &mut v.columns {
            c.rebuild_index();
        }
        Ok(v)
    }
}
