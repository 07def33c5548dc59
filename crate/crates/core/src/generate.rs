//! Seeded synthetic graph generators.
//!
//! Both generators draw from the full directed id space `[0,V) x [0,V)`
//! (self-loops allowed) and return exactly the requested number of
//! distinct edges.

use std::collections::HashSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, VertexId};

/// R-MAT quadrant probabilities (a, b, c); d is the remainder. The heavy
/// `a` corner concentrates edges on low ids, producing the skewed degree
/// distributions typical of real-world graphs.
const RMAT_A: f64 = 0.57;
const RMAT_B: f64 = 0.19;
const RMAT_C: f64 = 0.19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphModel {
    /// Uniform edge placement.
    ErdosRenyi,
    /// Recursive-matrix placement with skewed quadrant probabilities.
    Rmat,
}

impl FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "er" | "erdos-renyi" | "erdos_renyi" => Ok(GraphModel::ErdosRenyi),
            "rmat" | "r-mat" => Ok(GraphModel::Rmat),
            other => Err(Error::config(format!(
                "unknown graph model {other:?} (expected er or rmat)"
            ))),
        }
    }
}

/// Generates a random directed graph with exactly `num_edges` distinct
/// edges. Deterministic in `(model, num_vertices, num_edges, seed)`.
pub fn gen_random_graph(
    model: GraphModel,
    num_vertices: usize,
    num_edges: usize,
    seed: u64,
) -> Result<CsrGraph> {
    if num_vertices > u32::MAX as usize {
        return Err(Error::capacity(format!(
            "{num_vertices} vertices exceed the 32-bit id space"
        )));
    }
    let cells = num_vertices as u128 * num_vertices as u128;
    if num_edges as u128 > cells {
        return Err(Error::capacity(format!(
            "{num_edges} edges requested but only {cells} distinct edges exist \
             for {num_vertices} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = match model {
        GraphModel::ErdosRenyi => sample_uniform(num_vertices as u64, num_edges, &mut rng),
        GraphModel::Rmat => sample_rmat(num_vertices as u64, num_edges, &mut rng)?,
    };
    let v = num_vertices as u64;
    let edges: Vec<(VertexId, VertexId)> = picked
        .into_iter()
        .map(|cell| ((cell / v) as VertexId, (cell % v) as VertexId))
        .collect();
    CsrGraph::from_edges(num_vertices, &edges)
}

/// Floyd's sampling: exactly `count` distinct values from `[0, v*v)`
/// without rejection, whatever the density.
fn sample_uniform(v: u64, count: usize, rng: &mut ChaCha8Rng) -> HashSet<u64> {
    let n = v * v;
    let mut picked = HashSet::with_capacity(count);
    for j in (n - count as u64)..n {
        let t = rng.random_range(0..=j);
        if !picked.insert(t) {
            picked.insert(j);
        }
    }
    picked
}

fn sample_rmat(v: u64, count: usize, rng: &mut ChaCha8Rng) -> Result<HashSet<u64>> {
    let scale = (v.max(2) as f64).log2().ceil() as u32;
    let side = 1u64 << scale;
    debug_assert!(side >= v);
    let mut picked = HashSet::with_capacity(count);
    // Rejection has two sources: ids beyond V (the matrix side is padded to
    // a power of two) and duplicate edges. Both are rare at the sparse edge
    // counts this generator targets; the budget turns a pathological dense
    // request into an error instead of a hang.
    let mut budget: u64 = 200u64.saturating_mul(count as u64).saturating_add(1_000_000);
    while picked.len() < count {
        if budget == 0 {
            return Err(Error::capacity(
                "rmat generation exceeded its attempt budget; \
                 the requested edge count is too dense for this model",
            ));
        }
        budget -= 1;
        let (mut src, mut dst) = (0u64, 0u64);
        for _ in 0..scale {
            let r: f64 = rng.random_range(0.0..1.0);
            let (down, right) = if r < RMAT_A {
                (0, 0)
            } else if r < RMAT_A + RMAT_B {
                (0, 1)
            } else if r < RMAT_A + RMAT_B + RMAT_C {
                (1, 0)
            } else {
                (1, 1)
            };
            src = (src << 1) | down;
            dst = (dst << 1) | right;
        }
        if src < v && dst < v {
            picked.insert(src * v + dst);
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_stats;

    #[test]
    fn er_produces_exact_edge_count_deterministically() {
        let a = gen_random_graph(GraphModel::ErdosRenyi, 1000, 10_000, 42).unwrap();
        let b = gen_random_graph(GraphModel::ErdosRenyi, 1000, 10_000, 42).unwrap();
        assert_eq!(a.num_edges(), 10_000);
        assert_eq!(a, b);
        let c = gen_random_graph(GraphModel::ErdosRenyi, 1000, 10_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn er_handles_the_dense_extreme() {
        // Complete directed graph including self-loops: every cell picked.
        let g = gen_random_graph(GraphModel::ErdosRenyi, 20, 400, 7).unwrap();
        assert_eq!(g.num_edges(), 400);
        for v in 0..20u32 {
            assert_eq!(g.out_degree(v), 20);
        }
    }

    #[test]
    fn infeasible_edge_count_is_a_capacity_error() {
        assert!(matches!(
            gen_random_graph(GraphModel::ErdosRenyi, 10, 101, 0),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            gen_random_graph(GraphModel::Rmat, 10, 101, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn rmat_is_deterministic_and_skewed() {
        let v = 1 << 10;
        let e = 1 << 13;
        let a = gen_random_graph(GraphModel::Rmat, v, e, 3).unwrap();
        let b = gen_random_graph(GraphModel::Rmat, v, e, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_edges(), e);
        let stats = compute_stats(&a).unwrap();
        // The recursive splitting concentrates mass on low ids; the top
        // vertex should sit far above the mean.
        assert!(
            stats.max_degree as f64 > stats.avg_degree * 4.0,
            "rmat skew too weak: max {} vs avg {}",
            stats.max_degree,
            stats.avg_degree
        );
    }

    #[test]
    fn er_degree_distribution_is_flat_compared_to_rmat() {
        let v = 1 << 10;
        let e = 1 << 13;
        let er = gen_random_graph(GraphModel::ErdosRenyi, v, e, 3).unwrap();
        let rm = gen_random_graph(GraphModel::Rmat, v, e, 3).unwrap();
        let er_max = compute_stats(&er).unwrap().max_degree;
        let rm_max = compute_stats(&rm).unwrap().max_degree;
        assert!(
            rm_max > er_max * 2,
            "expected rmat max degree ({rm_max}) to dominate er ({er_max})"
        );
    }

    #[test]
    fn model_names_parse() {
        assert_eq!("er".parse::<GraphModel>().unwrap(), GraphModel::ErdosRenyi);
        assert_eq!("rmat".parse::<GraphModel>().unwrap(), GraphModel::Rmat);
        assert!("foo".parse::<GraphModel>().is_err());
    }
}
