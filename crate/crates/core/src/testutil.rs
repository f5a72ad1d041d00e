//! Small table builders shared by unit tests.

use crate::ingest::{InstanceTable, Task};

/// Binary table with only categorical columns; `rows[i]` holds row i's codes.
pub fn cat_table(rows: &[Vec<u32>], labels: &[f64]) -> InstanceTable {
    let n_cat = rows.first().map_or(0, Vec::len);
    let mut sizes = vec![1usize; n_cat];
    for r in rows {
        for (c, &v) in r.iter().enumerate() {
            sizes[c] = sizes[c].max(v as usize + 1);
        }
    }
    let task = if labels.iter().all(|&y| y == 0.0 || y == 1.0) {
        Task::Binary
    } else {
        Task::Regression
    };
    InstanceTable::new(
        task,
        (0..n_cat).map(|c| format!("C{}", c + 1)).collect(),
        vec![],
        "label".into(),
        sizes,
        rows.concat(),
        vec![],
        labels.to_vec(),
    )
    .unwrap()
}

/// `m` rows, one categorical column holding the row index modulo `groups`.
pub fn modulo_table(m: usize, groups: u32) -> InstanceTable {
    let rows: Vec<Vec<u32>> = (0..m).map(|i| vec![i as u32 % groups]).collect();
    let labels: Vec<f64> = (0..m).map(|i| (i % 2) as f64).collect();
    cat_table(&rows, &labels)
}
