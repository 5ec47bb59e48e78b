use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{train, TaskSplit, TrainConfig, TrainError};
use crate::embeddings::Embedder;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub hidden_size: usize,
    pub batch_size: usize,
    /// Best mean validation macro-F1 over tasks.
    pub macro_f1: f64,
}

/// Trains every (hidden size, batch size) cell with the template's other
/// settings and seed. Rows come back in hidden-major order.
pub fn grid_search(
    template: &TrainConfig,
    hidden_sizes: &[usize],
    batch_sizes: &[usize],
    tasks: &[TaskSplit],
    embedder: &Embedder,
) -> Result<Vec<GridRow>, TrainError> {
    if hidden_sizes.is_empty() || batch_sizes.is_empty() {
        return Err(TrainError::Config("grid axes must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(hidden_sizes.len() * batch_sizes.len());
    for &h in hidden_sizes {
        for &b in batch_sizes {
            let cfg = TrainConfig {
                hidden_size: h,
                batch_size: b,
                ..template.clone()
            };
            let out = train(&cfg, tasks, embedder)?;
            log::info!("grid H={h} B={b}: {:.4}", out.best_mean());
            rows.push(GridRow {
                hidden_size: h,
                batch_size: b,
                macro_f1: out.best_mean(),
            });
        }
    }
    Ok(rows)
}

/// Highest-scoring cell; the first one wins ties.
pub fn best_cell(rows: &[GridRow]) -> Option<GridRow> {
    rows.iter()
        .copied()
        .fold(None, |best: Option<GridRow>, r| match best {
            Some(b) if b.macro_f1 >= r.macro_f1 => Some(b),
            _ => Some(r),
        })
}

/// CSV `hidden_size,batch_size,macro_f1`.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], w: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["hidden_size", "batch_size", "macro_f1"])?;
    for r in rows {
        w.write_record([
            r.hidden_size.to_string(),
            r.batch_size.to_string(),
            format!("{:.6}", r.macro_f1),
        ])?;
    }
    w.flush()
}
