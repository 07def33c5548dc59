//! Directed graphs in compressed sparse row form: construction, text
//! ingestion, statistics, and a versioned binary container.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex ids are dense and zero-based.
pub type VertexId = u32;

const GRAPH_MAGIC: &[u8; 4] = b"GCSR";
const GRAPH_VERSION: u32 = 1;

/// Directed adjacency in CSR form.
///
/// Canonical: `row_offsets` is monotone with `row_offsets[0] == 0`, and the
/// column indices of every row are strictly increasing (no duplicate edges).
/// The structure is immutable once built, so the canonical form is
/// established by the constructors and never re-checked on access.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrGraph {
    num_vertices: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<VertexId>,
}

impl CsrGraph {
    /// Builds a graph from an arbitrary edge list. Edges are sorted and
    /// deduplicated; self-loops are kept only if present in the input.
    pub fn from_edges(num_vertices: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        for &(src, dst) in edges {
            for v in [src, dst] {
                if v as usize >= num_vertices {
                    return Err(Error::Bounds {
                        vertex: v as u64,
                        limit: num_vertices as u64,
                    });
                }
            }
        }
        let mut sorted: Vec<(VertexId, VertexId)> = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();

        let mut row_offsets = Vec::with_capacity(num_vertices + 1);
        let mut col_indices = Vec::with_capacity(sorted.len());
        row_offsets.push(0);
        let mut cursor = 0;
        for v in 0..num_vertices as u32 {
            while cursor < sorted.len() && sorted[cursor].0 == v {
                col_indices.push(sorted[cursor].1);
                cursor += 1;
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrGraph {
            num_vertices,
            row_offsets,
            col_indices,
        })
    }

    /// Wraps pre-built CSR arrays, validating every canonical-form invariant.
    pub fn from_raw_parts(
        num_vertices: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<VertexId>,
    ) -> Result<Self> {
        let g = CsrGraph {
            num_vertices,
            row_offsets,
            col_indices,
        };
        g.validate()?;
        Ok(g)
    }

    /// For internal construction sites that produce canonical CSR by
    /// construction (e.g. subgraph extraction over ascending id maps).
    pub(crate) fn from_parts_unchecked(
        num_vertices: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<VertexId>,
    ) -> Self {
        let g = CsrGraph {
            num_vertices,
            row_offsets,
            col_indices,
        };
        debug_assert!(g.validate().is_ok());
        g
    }

    fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.num_vertices + 1 {
            return Err(Error::format(format!(
                "row offset array has length {}, expected {}",
                self.row_offsets.len(),
                self.num_vertices + 1
            )));
        }
        if self.row_offsets[0] != 0 {
            return Err(Error::format("row offsets must start at zero"));
        }
        if *self.row_offsets.last().unwrap() != self.col_indices.len() {
            return Err(Error::format(
                "last row offset does not match the number of edges",
            ));
        }
        for v in 0..self.num_vertices {
            let (lo, hi) = (self.row_offsets[v], self.row_offsets[v + 1]);
            if lo > hi {
                return Err(Error::format(format!("row offsets decrease at vertex {v}")));
            }
            let row = &self.col_indices[lo..hi];
            for pair in row.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::format(format!(
                        "row {v} is not strictly increasing (duplicate or unsorted edge)"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last as usize >= self.num_vertices {
                    return Err(Error::Bounds {
                        vertex: last as u64,
                        limit: self.num_vertices as u64,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    /// Out-neighbors of `v`, ascending.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[VertexId] {
        &self.col_indices
    }

    /// Serialized size of the adjacency structure: 64-bit offsets plus
    /// 32-bit column indices. Used by the offload cost model.
    pub fn adjacency_bytes(&self) -> u64 {
        (self.num_vertices as u64 + 1) * 8 + self.num_edges() as u64 * 4
    }

    /// Writes the versioned binary container.
    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(GRAPH_MAGIC)?;
        w.write_u32::<LE>(GRAPH_VERSION)?;
        w.write_u64::<LE>(self.num_vertices as u64)?;
        w.write_u64::<LE>(self.num_edges() as u64)?;
        for &off in &self.row_offsets {
            w.write_u64::<LE>(off as u64)?;
        }
        for &c in &self.col_indices {
            w.write_u32::<LE>(c)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the binary container, re-validating all structural invariants.
    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        // A file too short to hold the header is malformed, not truncated.
        if let Err(e) = r.read_exact(&mut magic) {
            return Err(if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::format("file too short for graph header")
            } else {
                e.into()
            });
        }
        if &magic != GRAPH_MAGIC {
            return Err(Error::format("bad graph magic"));
        }
        let version = r.read_u32::<LE>()?;
        if version != GRAPH_VERSION {
            return Err(Error::format(format!(
                "unsupported graph container version {version}"
            )));
        }
        let num_vertices = r.read_u64::<LE>()? as usize;
        let num_edges = r.read_u64::<LE>()? as usize;
        let mut row_offsets = Vec::with_capacity(num_vertices + 1);
        for _ in 0..=num_vertices {
            row_offsets.push(r.read_u64::<LE>()? as usize);
        }
        let mut col_indices = Vec::with_capacity(num_edges);
        for _ in 0..num_edges {
            col_indices.push(r.read_u32::<LE>()?);
        }
        CsrGraph::from_raw_parts(num_vertices, row_offsets, col_indices)
    }
}

/// Headline statistics for a graph.
///
/// `density` is `E / V^2` over the full directed id space (self-loops
/// included in the denominator); `avg_degree` is `E / V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_vertices: u64,
    pub num_edges: u64,
    pub density: f64,
    pub avg_degree: f64,
    pub max_degree: u64,
}

/// Computes [`GraphStats`]. Errors on an empty vertex set, for which
/// density is undefined.
pub fn compute_stats(g: &CsrGraph) -> Result<GraphStats> {
    let v = g.num_vertices() as u64;
    if v == 0 {
        return Err(Error::config("graph has no vertices; statistics undefined"));
    }
    let e = g.num_edges() as u64;
    let max_degree = (0..g.num_vertices())
        .map(|i| g.out_degree(i as VertexId) as u64)
        .max()
        .unwrap_or(0);
    Ok(GraphStats {
        num_vertices: v,
        num_edges: e,
        density: e as f64 / (v as f64 * v as f64),
        avg_degree: e as f64 / v as f64,
        max_degree,
    })
}

/// Loads a whitespace-separated `src dst` edge list. Lines beginning with
/// `#` and blank lines are skipped. When `num_vertices` is `None` the
/// vertex count is inferred as `max id + 1`.
pub fn load_edge_list(path: impl AsRef<Path>, num_vertices: Option<usize>) -> Result<CsrGraph> {
    let reader = BufReader::new(File::open(path)?);
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut max_id: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut fields = body.split_whitespace();
        let (src, dst) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (parse_id(a, lineno)?, parse_id(b, lineno)?),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected two vertex ids, got {body:?}"),
                })
            }
        };
        if let Some(limit) = num_vertices {
            for v in [src, dst] {
                if v >= limit as u64 {
                    return Err(Error::Bounds {
                        vertex: v,
                        limit: limit as u64,
                    });
                }
            }
        }
        max_id = Some(max_id.unwrap_or(0).max(src).max(dst));
        edges.push((src as VertexId, dst as VertexId));
    }
    let n = match num_vertices {
        Some(n) => n,
        None => max_id.map_or(0, |m| m as usize + 1),
    };
    CsrGraph::from_edges(n, &edges)
}

fn parse_id(tok: &str, lineno: usize) -> Result<u64> {
    let id: u64 = tok.parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: format!("invalid vertex id {tok:?}"),
    })?;
    if id > u32::MAX as u64 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("vertex id {id} exceeds the 32-bit id space"),
        });
    }
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn edge_list_builds_expected_csr() {
        let f = write_tmp("0 1\n1 0\n1 2\n");
        let g = load_edge_list(f.path(), None).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.row_offsets(), &[0, 1, 3, 3]);
        assert_eq!(g.col_indices(), &[1, 0, 2]);
    }

    #[test]
    fn edge_list_skips_comments_and_dedups() {
        let f = write_tmp("# header\n\n0 1\n0 1\n 2 0 \n");
        let g = load_edge_list(f.path(), None).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(2), &[0]);
    }

    #[test]
    fn empty_edge_list_with_declared_vertices() {
        let f = write_tmp("");
        let g = load_edge_list(f.path(), Some(4)).unwrap();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn out_of_range_vertex_is_rejected() {
        let f = write_tmp("0 5\n");
        match load_edge_list(f.path(), Some(3)) {
            Err(Error::Bounds { vertex: 5, limit: 3 }) => {}
            other => panic!("expected bounds error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("0 1\nnope\n");
        match load_edge_list(f.path(), None) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
    }

    #[test]
    fn neighbors_are_strictly_increasing() {
        let g = CsrGraph::from_edges(5, &[(1, 4), (1, 0), (1, 2), (1, 2)]).unwrap();
        assert_eq!(g.neighbors(1), &[0, 2, 4]);
        assert_eq!(g.out_degree(1), 3);
        assert_eq!(g.out_degree(3), 0);
    }

    #[test]
    fn raw_parts_validation_catches_corruption() {
        // unsorted row
        assert!(CsrGraph::from_raw_parts(3, vec![0, 2, 2, 2], vec![2, 1]).is_err());
        // column out of range
        assert!(CsrGraph::from_raw_parts(3, vec![0, 1, 1, 1], vec![7]).is_err());
        // offsets not monotone
        assert!(CsrGraph::from_raw_parts(3, vec![0, 2, 1, 2], vec![1, 2]).is_err());
        // well-formed
        assert!(CsrGraph::from_raw_parts(3, vec![0, 2, 2, 2], vec![1, 2]).is_ok());
    }

    #[test]
    fn stats_on_directed_triangle() {
        let g = CsrGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let s = compute_stats(&g).unwrap();
        assert_eq!(s.num_vertices, 3);
        assert_eq!(s.num_edges, 3);
        assert!((s.density - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.avg_degree - 1.0).abs() < 1e-12);
        assert_eq!(s.max_degree, 1);
    }

    #[test]
    fn stats_reject_empty_graph() {
        let g = CsrGraph::from_edges(0, &[]).unwrap();
        assert!(matches!(compute_stats(&g), Err(Error::Config(_))));
    }

    #[test]
    fn binary_round_trip_preserves_graph() {
        let g = CsrGraph::from_edges(6, &[(0, 3), (3, 1), (3, 5), (5, 0), (2, 2)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.gcsr");
        g.save_binary(&path).unwrap();
        let back = CsrGraph::load_binary(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();

        let empty = dir.path().join("empty.gcsr");
        std::fs::write(&empty, b"").unwrap();
        assert!(matches!(CsrGraph::load_binary(&empty), Err(Error::Format(_))));

        let bad = dir.path().join("bad.gcsr");
        std::fs::write(&bad, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(CsrGraph::load_binary(&bad), Err(Error::Format(_))));

        let g = CsrGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let full = dir.path().join("full.gcsr");
        g.save_binary(&full).unwrap();
        let bytes = std::fs::read(&full).unwrap();
        let cut = dir.path().join("cut.gcsr");
        std::fs::write(&cut, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(CsrGraph::load_binary(&cut), Err(Error::Io(_))));
    }
}
