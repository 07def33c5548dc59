//! Slow, dense, f64 reference implementations used to cross-check the
//! production kernels. Deliberately independent of the CSR kernels: the
//! adjacency is materialized as a dense matrix and every pipeline step is
//! recomputed from first principles in f64.

use std::collections::BTreeSet;

use crate::engine::{Aggregation, GcnModel};
use crate::features::FeatureMatrix;
use crate::graph::CsrGraph;

/// Dense `V x V` coefficient matrix for `mode` over `g`, in f64.
/// Row `v` holds the scales applied when aggregating at `v`; the diagonal
/// carries the self-loop term when `self_loops` is set.
pub fn dense_coefficient_matrix(g: &CsrGraph, mode: Aggregation, self_loops: bool) -> Vec<f64> {
    let n = g.num_vertices();
    let bump = u64::from(self_loops);
    let deg: Vec<u64> = (0..n).map(|v| g.out_degree(v as u32) as u64 + bump).collect();
    let scale = |dv: u64, du: u64| -> f64 {
        match mode {
            Aggregation::Sum => 1.0,
            Aggregation::Mean => {
                if dv == 0 {
                    0.0
                } else {
                    1.0 / dv as f64
                }
            }
            Aggregation::SymNorm => {
                if dv == 0 || du == 0 {
                    0.0
                } else {
                    1.0 / ((dv * du) as f64).sqrt()
                }
            }
        }
    };
    let mut a = vec![0.0f64; n * n];
    for v in 0..n {
        for &u in g.neighbors(v as u32) {
            a[v * n + u as usize] = scale(deg[v], deg[u as usize]);
        }
        if self_loops {
            // Additive: an explicit (v, v) edge keeps its edge coefficient
            // and the model self-term stacks on top of it.
            a[v * n + v] += match mode {
                Aggregation::Sum => 1.0,
                Aggregation::Mean | Aggregation::SymNorm => {
                    if deg[v] == 0 {
                        0.0
                    } else {
                        1.0 / deg[v] as f64
                    }
                }
            };
        }
    }
    a
}

/// Dense `rows x cols` times `cols x out` product in f64.
pub fn dense_matmul(a: &[f64], rows: usize, cols: usize, b: &[f64], out_cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), cols * out_cols);
    let mut out = vec![0.0f64; rows * out_cols];
    for i in 0..rows {
        for k in 0..cols {
            let aik = a[i * cols + k];
            for j in 0..out_cols {
                out[i * out_cols + j] += aik * b[k * out_cols + j];
            }
        }
    }
    out
}

/// `A_coeff * X` with a dense coefficient matrix, no self-loop diagonal.
pub fn reference_spmm(g: &CsrGraph, x: &FeatureMatrix, mode: Option<Aggregation>) -> Vec<f64> {
    let n = g.num_vertices();
    let a = dense_coefficient_matrix(g, mode.unwrap_or(Aggregation::Sum), false);
    let xs: Vec<f64> = x.values().iter().map(|&v| v as f64).collect();
    dense_matmul(&a, n, n, &xs, x.dim())
}

/// Full pipeline in f64 over the dense adjacency: aggregation, dense
/// update with bias, ReLU between layers.
pub fn reference_inference(g: &CsrGraph, x: &FeatureMatrix, model: &GcnModel) -> Vec<f64> {
    let n = g.num_vertices();
    let a = dense_coefficient_matrix(g, model.aggregation(), model.self_loops());
    let mut h: Vec<f64> = x.values().iter().map(|&v| v as f64).collect();
    let mut dim = x.dim();
    for (idx, layer) in model.layers().iter().enumerate() {
        let agg = dense_matmul(&a, n, n, &h, dim);
        let w: Vec<f64> = layer.weight().iter().map(|&v| v as f64).collect();
        let mut z = dense_matmul(&agg, n, dim, &w, layer.out_dim());
        if let Some(bias) = layer.bias() {
            for r in 0..n {
                for (j, &b) in bias.iter().enumerate() {
                    z[r * layer.out_dim() + j] += b as f64;
                }
            }
        }
        if idx + 1 < model.num_layers() {
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        dim = layer.out_dim();
        h = z;
    }
    h
}

/// Set of vertices within `hops` out-edge steps of `seeds`, seeds
/// included, computed by naive repeated scanning.
pub fn reference_khop(g: &CsrGraph, seeds: &[u32], hops: usize) -> BTreeSet<u32> {
    let mut reach: BTreeSet<u32> = seeds.iter().copied().collect();
    for _ in 0..hops {
        let mut next = reach.clone();
        for &v in &reach {
            next.extend(g.neighbors(v).iter().copied());
        }
        if next.len() == reach.len() {
            break;
        }
        reach = next;
    }
    reach
}

/// Largest absolute difference between an f32 matrix and an f64 oracle.
pub fn max_abs_diff(got: &FeatureMatrix, want: &[f64]) -> f64 {
    assert_eq!(got.values().len(), want.len());
    got.values()
        .iter()
        .zip(want)
        .map(|(&g, &w)| (g as f64 - w).abs())
        .fold(0.0, f64::max)
}
