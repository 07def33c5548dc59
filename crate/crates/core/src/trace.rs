//! Per-mini-batch trace records, emitted as JSON Lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One sampling/execution step of a sampled pipeline. `layer` is present
/// for layer-wise runs, where every (layer, batch) pair samples anew;
/// batch-wise runs emit one record per batch covering all layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    pub batch_index: usize,
    /// Number of target vertices whose outputs this step produces.
    pub targets: usize,
    /// Size of the expanded vertex set gathered for this step.
    pub expanded: usize,
    /// Edges in the extracted subgraph.
    pub subgraph_edges: usize,
    /// Feature bytes moved in (expanded rows at the step input dimension).
    pub bytes_in: u64,
    /// Feature bytes moved out (target rows at the step output dimension).
    pub bytes_out: u64,
}

/// Writes one JSON object per line.
pub fn write_trace_jsonl(records: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        serde_json::to_writer(&mut w, rec)
            .map_err(|e| crate::error::Error::format(format!("trace serialization: {e}")))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![
            TraceRecord {
                mode: "batch-wise".into(),
                layer: None,
                batch_index: 0,
                targets: 4,
                expanded: 9,
                subgraph_edges: 12,
                bytes_in: 9 * 8 * 4,
                bytes_out: 4 * 2 * 4,
            },
            TraceRecord {
                mode: "layer-wise".into(),
                layer: Some(1),
                batch_index: 3,
                targets: 4,
                expanded: 6,
                subgraph_edges: 5,
                bytes_in: 6 * 8 * 4,
                bytes_out: 4 * 8 * 4,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.jsonl");
        write_trace_jsonl(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: Vec<TraceRecord> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(recs, back);
        // Layer field is omitted when absent.
        assert!(!text.lines().next().unwrap().contains("layer"));
    }
}
