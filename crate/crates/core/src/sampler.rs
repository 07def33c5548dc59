//! Exact full-neighborhood mini-batch sampling.
//!
//! Two regimes over the same plan machinery:
//!
//! * **Batch-wise**: vertices are split into contiguous ascending-id
//!   batches; each batch expands its full D-hop in-support, extracts a
//!   subgraph, and runs every layer locally. Layer `l` computes exactly
//!   the rows needed by layer `l+1`, shrinking toward the targets.
//! * **Layer-wise**: every layer partitions all vertices into batches,
//!   expands one hop only, computes that single layer for the batch, and
//!   scatters into a full-graph checkpoint that feeds the next layer.
//!
//! Both reproduce full-graph inference exactly: subgraphs are relabeled in
//! ascending global order (preserving per-row accumulation order) and
//! normalization uses global degrees, so sampled outputs are bit-identical
//! to the unsampled pipeline.

use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::{KernelCategory, KernelClock};
use crate::engine::{
    aggregate_rows_into, check_rows_finite, dense_rows_into, edge_coeff, effective_degrees,
    relu_rows_in_place, self_coeff, Aggregation, GcnModel, NormCoefficients, RowSet,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{CsrGraph, VertexId};
use crate::trace::TraceRecord;

/// Feature element width in bytes, for trace accounting.
const ELEM: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    BatchWise,
    LayerWise,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMode::BatchWise => "batch-wise",
            SamplingMode::LayerWise => "layer-wise",
        }
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "batch-wise" | "batchwise" | "batch_wise" => Ok(SamplingMode::BatchWise),
            "layer-wise" | "layerwise" | "layer_wise" => Ok(SamplingMode::LayerWise),
            other => Err(Error::config(format!(
                "unknown sampling mode {other:?} (expected batch-wise or layer-wise)"
            ))),
        }
    }
}

/// Sampling regime plus mini-batch size. Batches always cover the vertex
/// set in ascending contiguous id ranges, so a run is fully determined by
/// this config and the inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub batch_size: usize,
}

impl SamplingConfig {
    pub fn new(mode: SamplingMode, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(SamplingConfig { mode, batch_size })
    }

    /// Number of batches needed to cover `num_vertices` targets.
    pub fn num_batches(&self, num_vertices: usize) -> usize {
        num_vertices.div_ceil(self.batch_size)
    }

    fn batch_range(&self, batch: usize, num_vertices: usize) -> Range<u32> {
        let lo = batch * self.batch_size;
        let hi = ((batch + 1) * self.batch_size).min(num_vertices);
        lo as u32..hi as u32
    }

    fn expect_mode(&self, mode: SamplingMode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::config(format!(
                "config is for {} sampling but a {} pipeline was requested",
                self.mode.as_str(),
                mode.as_str()
            )))
        }
    }
}

/// Vertices within `hops` out-edge steps of `seeds`, seeds included,
/// ascending. Duplicate seeds are tolerated.
pub fn expand_neighborhood(g: &CsrGraph, seeds: &[VertexId], hops: usize) -> Result<Vec<VertexId>> {
    for &s in seeds {
        if s as usize >= g.num_vertices() {
            return Err(Error::Bounds {
                vertex: s as u64,
                limit: g.num_vertices() as u64,
            });
        }
    }
    let mut visited = vec![false; g.num_vertices()];
    let mut base: Vec<VertexId> = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !visited[s as usize] {
            visited[s as usize] = true;
            base.push(s);
        }
    }
    base.sort_unstable();
    Ok(khop_sets(g, base, hops, &mut visited).pop().unwrap())
}

/// Nested per-hop reach sets `[S_0, ..., S_hops]`, each ascending.
/// `visited` must be pre-marked for the seeds and is consumed as scratch.
fn khop_sets(
    g: &CsrGraph,
    seeds: Vec<VertexId>,
    hops: usize,
    visited: &mut [bool],
) -> Vec<Vec<VertexId>> {
    let mut sets = Vec::with_capacity(hops + 1);
    let mut frontier = seeds.clone();
    sets.push(seeds);
    for _ in 0..hops {
        let mut fresh: Vec<VertexId> = Vec::new();
        for &v in &frontier {
            for &u in g.neighbors(v) {
                if !visited[u as usize] {
                    visited[u as usize] = true;
                    fresh.push(u);
                }
            }
        }
        fresh.sort_unstable();
        let merged = merge_sorted(sets.last().unwrap(), &fresh);
        sets.push(merged);
        frontier = fresh;
    }
    sets
}

/// Merge of two sorted, disjoint id lists.
fn merge_sorted(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Everything one mini-batch step needs: the expanded vertex sets, the
/// extracted subgraph over local ids, and the normalization scales
/// (computed from *global* degrees, which is what makes sampled execution
/// exact).
///
/// `layer_sets[0]` holds the targets; each following set extends the
/// previous by one hop; the last is the expanded support and doubles as
/// the local-to-global id map. The subgraph stores full adjacency rows
/// for every vertex of `layer_sets[len - 2]` (the rows some layer
/// aggregates) and empty rows elsewhere.
#[derive(Clone, Debug)]
pub struct MiniBatchPlan {
    pub batch_index: usize,
    /// Model layer this plan serves; `None` for batch-wise plans, which
    /// serve every layer.
    pub layer: Option<usize>,
    pub layer_sets: Vec<Vec<VertexId>>,
    pub subgraph: CsrGraph,
    pub coeffs: NormCoefficients,
    pub self_scales: Option<Vec<f32>>,
    /// Local row indices computed at each execution step, outermost first.
    active_local: Vec<Vec<u32>>,
}

impl MiniBatchPlan {
    pub fn targets(&self) -> &[VertexId] {
        &self.layer_sets[0]
    }

    /// Ascending global ids of the expanded support; local id `i` means
    /// global id `expanded()[i]`.
    pub fn expanded(&self) -> &[VertexId] {
        self.layer_sets.last().unwrap()
    }

    pub fn global_to_local(&self, v: VertexId) -> Option<u32> {
        self.expanded().binary_search(&v).ok().map(|i| i as u32)
    }

    fn target_locals(&self) -> &[u32] {
        self.active_local.last().unwrap()
    }
}

struct PlanContext<'a> {
    g: &'a CsrGraph,
    mode: Aggregation,
    self_loops: bool,
    /// Effective degrees of the *full* graph.
    degrees: &'a [u64],
}

impl PlanContext<'_> {
    fn build(&self, batch_index: usize, layer: Option<usize>, targets: Range<u32>, hops: usize) -> MiniBatchPlan {
        let g = self.g;
        let mut visited = vec![false; g.num_vertices()];
        for v in targets.clone() {
            visited[v as usize] = true;
        }
        let sets = khop_sets(g, targets.collect(), hops, &mut visited);
        let expanded = sets.last().unwrap();

        let mut local_of = vec![u32::MAX; g.num_vertices()];
        for (i, &v) in expanded.iter().enumerate() {
            local_of[v as usize] = i as u32;
        }

        // Subgraph rows are kept only for vertices some layer aggregates:
        // the union of all active sets, i.e. the second-to-last set. Their
        // neighbors all lie one hop further, inside the expanded set, so
        // full global rows can be copied without membership tests.
        let agg_rows = &sets[sets.len() - 2];
        let mut row_offsets = Vec::with_capacity(expanded.len() + 1);
        row_offsets.push(0usize);
        let mut col_indices: Vec<VertexId> = Vec::new();
        let mut coeffs: Vec<f32> = Vec::new();
        let mut agg_cursor = agg_rows.iter().peekable();
        for &v in expanded {
            if agg_cursor.peek() == Some(&&v) {
                agg_cursor.next();
                let dv = self.degrees[v as usize];
                for &u in g.neighbors(v) {
                    debug_assert_ne!(local_of[u as usize], u32::MAX);
                    col_indices.push(local_of[u as usize]);
                    coeffs.push(edge_coeff(self.mode, dv, self.degrees[u as usize]));
                }
            }
            row_offsets.push(col_indices.len());
        }
        let subgraph = CsrGraph::from_parts_unchecked(expanded.len(), row_offsets, col_indices);

        let self_scales: Option<Vec<f32>> = self.self_loops.then(|| {
            expanded
                .iter()
                .map(|&v| self_coeff(self.mode, self.degrees[v as usize]))
                .collect()
        });

        let to_local = |set: &[VertexId]| -> Vec<u32> {
            set.iter().map(|&v| local_of[v as usize]).collect()
        };
        let active_local: Vec<Vec<u32>> = match layer {
            // Batch-wise: step l aggregates S_{D-1-l}, ending at the targets.
            None => (0..hops).map(|l| to_local(&sets[hops - 1 - l])).collect(),
            // Layer-wise: the single step aggregates the targets.
            Some(_) => vec![to_local(&sets[0])],
        };

        MiniBatchPlan {
            batch_index,
            layer,
            layer_sets: sets,
            subgraph,
            coeffs: NormCoefficients::from_vec(coeffs),
            self_scales,
            active_local,
        }
    }
}

fn plan_context<'a>(g: &'a CsrGraph, model: &GcnModel, degrees: &'a [u64]) -> PlanContext<'a> {
    PlanContext {
        g,
        mode: model.aggregation(),
        self_loops: model.self_loops(),
        degrees,
    }
}

/// Materializes every batch-wise plan: contiguous ascending-id batches,
/// each expanded to its D-hop support.
pub fn plan_batchwise(g: &CsrGraph, cfg: &SamplingConfig, model: &GcnModel) -> Result<Vec<MiniBatchPlan>> {
    cfg.expect_mode(SamplingMode::BatchWise)?;
    let degrees = effective_degrees(g, model.self_loops());
    let ctx = plan_context(g, model, &degrees);
    let hops = model.num_layers();
    Ok((0..cfg.num_batches(g.num_vertices()))
        .map(|b| ctx.build(b, None, cfg.batch_range(b, g.num_vertices()), hops))
        .collect())
}

/// Materializes every layer-wise plan for one layer: the same batch
/// partition, expanded a single hop.
pub fn plan_layerwise(
    g: &CsrGraph,
    cfg: &SamplingConfig,
    model: &GcnModel,
    layer_index: usize,
) -> Result<Vec<MiniBatchPlan>> {
    cfg.expect_mode(SamplingMode::LayerWise)?;
    if layer_index >= model.num_layers() {
        return Err(Error::config(format!(
            "layer index {layer_index} out of range for a {}-layer model",
            model.num_layers()
        )));
    }
    let degrees = effective_degrees(g, model.self_loops());
    let ctx = plan_context(g, model, &degrees);
    Ok((0..cfg.num_batches(g.num_vertices()))
        .map(|b| ctx.build(b, Some(layer_index), cfg.batch_range(b, g.num_vertices()), 1))
        .collect())
}

/// Runs the layers a plan covers on gathered local features. Returns the
/// local activation matrix of the last covered layer; only the target rows
/// are meaningful at that point.
fn execute_plan(
    plan: &MiniBatchPlan,
    local_x: FeatureMatrix,
    model: &GcnModel,
    clock: &mut KernelClock,
) -> Result<FeatureMatrix> {
    let n_local = plan.expanded().len();
    let coeffs = match model.aggregation() {
        Aggregation::Sum => None,
        _ => Some(plan.coeffs.per_edge()),
    };
    let layer_indices: Vec<usize> = match plan.layer {
        Some(l) => vec![l],
        None => (0..model.num_layers()).collect(),
    };
    let mut current = local_x;
    for (step, &li) in layer_indices.iter().enumerate() {
        let layer = &model.layers()[li];
        let active = RowSet::Subset(&plan.active_local[step]);
        let mut agg = FeatureMatrix::zeros(n_local, current.dim())?;
        clock.time(KernelCategory::Spmm, || {
            aggregate_rows_into(
                &plan.subgraph,
                &current,
                coeffs,
                plan.self_scales.as_deref(),
                active,
                &mut agg,
            )
        });
        let mut z = FeatureMatrix::zeros(n_local, layer.out_dim())?;
        clock.time(KernelCategory::DenseMm, || {
            dense_rows_into(&agg, layer, active, &mut z)
        });
        if li + 1 < model.num_layers() {
            relu_rows_in_place(&mut z, active);
        }
        check_rows_finite(&z, active, li)?;
        current = z;
    }
    Ok(current)
}

/// Output of a clocked sampled run: final activations plus one trace
/// record per sampling step.
pub struct SampledRun {
    pub output: FeatureMatrix,
    pub trace: Vec<TraceRecord>,
}

/// Batch-wise sampled inference. Exactly equivalent to
/// [`crate::engine::full_graph_inference`] on the same inputs.
pub fn run_batchwise(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    cfg: &SamplingConfig,
) -> Result<FeatureMatrix> {
    Ok(run_batchwise_clocked(g, x, model, cfg, &mut KernelClock::disabled(), false)?.output)
}

/// As [`run_batchwise`], attributing kernel time and optionally recording
/// a per-batch trace. Batches run sequentially whenever the clock is
/// enabled so that attribution is well-defined.
pub fn run_batchwise_clocked(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    cfg: &SamplingConfig,
    clock: &mut KernelClock,
    want_trace: bool,
) -> Result<SampledRun> {
    cfg.expect_mode(SamplingMode::BatchWise)?;
    check_run_shapes(g, x, model)?;
    let degrees = effective_degrees(g, model.self_loops());
    let ctx = plan_context(g, model, &degrees);
    let hops = model.num_layers();
    let n = g.num_vertices();
    let n_batches = cfg.num_batches(n);
    let mut out = FeatureMatrix::zeros(n, model.output_dim())?;
    let mut trace = Vec::with_capacity(if want_trace { n_batches } else { 0 });

    let run_one = |b: usize, clock: &mut KernelClock| -> Result<(MiniBatchPlan, FeatureMatrix)> {
        let plan = clock.time(KernelCategory::Sampling, || {
            ctx.build(b, None, cfg.batch_range(b, n), hops)
        });
        let local_x =
            clock.time(KernelCategory::Sampling, || x.gather_rows(plan.expanded()))?;
        let local_out = execute_plan(&plan, local_x, model, clock)?;
        let compact = local_out.gather_rows(plan.target_locals())?;
        Ok((plan, compact))
    };

    let scatter = |plan: &MiniBatchPlan, compact: &FeatureMatrix, out: &mut FeatureMatrix| {
        for (i, &v) in plan.targets().iter().enumerate() {
            out.row_mut(v as usize).copy_from_slice(compact.row(i));
        }
    };

    let record = |plan: &MiniBatchPlan| TraceRecord {
        mode: SamplingMode::BatchWise.as_str().into(),
        layer: None,
        batch_index: plan.batch_index,
        targets: plan.targets().len(),
        expanded: plan.expanded().len(),
        subgraph_edges: plan.subgraph.num_edges(),
        bytes_in: plan.expanded().len() as u64 * model.input_dim() as u64 * ELEM,
        bytes_out: plan.targets().len() as u64 * model.output_dim() as u64 * ELEM,
    };

    #[cfg(feature = "parallel")]
    if !clock.is_enabled() && n_batches > 1 {
        use rayon::prelude::*;
        let results: Vec<(MiniBatchPlan, FeatureMatrix)> = (0..n_batches)
            .into_par_iter()
            .map(|b| run_one(b, &mut KernelClock::disabled()))
            .collect::<Result<_>>()?;
        for (plan, compact) in &results {
            scatter(plan, compact, &mut out);
            if want_trace {
                trace.push(record(plan));
            }
        }
        return Ok(SampledRun { output: out, trace });
    }

    for b in 0..n_batches {
        let (plan, compact) = run_one(b, clock)?;
        scatter(&plan, &compact, &mut out);
        if want_trace {
            trace.push(record(&plan));
        }
    }
    Ok(SampledRun { output: out, trace })
}

/// Layer-wise sampled inference: one full-graph checkpoint per layer.
/// Exactly equivalent to [`crate::engine::full_graph_inference`].
pub fn run_layerwise(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    cfg: &SamplingConfig,
) -> Result<FeatureMatrix> {
    Ok(run_layerwise_clocked(g, x, model, cfg, &mut KernelClock::disabled(), false)?.output)
}

/// As [`run_layerwise`], with kernel-time attribution and optional trace.
/// Every (layer, batch) pair performs its own sampling step, which is the
/// defining cost of this regime.
pub fn run_layerwise_clocked(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    cfg: &SamplingConfig,
    clock: &mut KernelClock,
    want_trace: bool,
) -> Result<SampledRun> {
    cfg.expect_mode(SamplingMode::LayerWise)?;
    check_run_shapes(g, x, model)?;
    let degrees = effective_degrees(g, model.self_loops());
    let ctx = plan_context(g, model, &degrees);
    let n = g.num_vertices();
    let n_batches = cfg.num_batches(n);
    let mut trace = Vec::new();

    let mut owned: Option<FeatureMatrix> = None;
    for li in 0..model.num_layers() {
        let input = owned.as_ref().unwrap_or(x);
        let out_dim = model.layers()[li].out_dim();
        let mut next = FeatureMatrix::zeros(n, out_dim)?;

        let run_one =
            |b: usize, clock: &mut KernelClock| -> Result<(MiniBatchPlan, FeatureMatrix)> {
                let plan = clock.time(KernelCategory::Sampling, || {
                    ctx.build(b, Some(li), cfg.batch_range(b, n), 1)
                });
                let local_x = clock.time(KernelCategory::Sampling, || {
                    input.gather_rows(plan.expanded())
                })?;
                let local_out = execute_plan(&plan, local_x, model, clock)?;
                let compact = local_out.gather_rows(plan.target_locals())?;
                Ok((plan, compact))
            };

        let record = |plan: &MiniBatchPlan| TraceRecord {
            mode: SamplingMode::LayerWise.as_str().into(),
            layer: Some(li),
            batch_index: plan.batch_index,
            targets: plan.targets().len(),
            expanded: plan.expanded().len(),
            subgraph_edges: plan.subgraph.num_edges(),
            bytes_in: plan.expanded().len() as u64 * input.dim() as u64 * ELEM,
            bytes_out: plan.targets().len() as u64 * out_dim as u64 * ELEM,
        };

        let scatter_all = |results: Vec<(MiniBatchPlan, FeatureMatrix)>,
                           next: &mut FeatureMatrix,
                           trace: &mut Vec<TraceRecord>| {
            for (plan, compact) in &results {
                for (i, &v) in plan.targets().iter().enumerate() {
                    next.row_mut(v as usize).copy_from_slice(compact.row(i));
                }
                if want_trace {
                    trace.push(record(plan));
                }
            }
        };

        #[cfg(feature = "parallel")]
        if !clock.is_enabled() && n_batches > 1 {
            use rayon::prelude::*;
            let results: Vec<(MiniBatchPlan, FeatureMatrix)> = (0..n_batches)
                .into_par_iter()
                .map(|b| run_one(b, &mut KernelClock::disabled()))
                .collect::<Result<_>>()?;
            scatter_all(results, &mut next, &mut trace);
            owned = Some(next);
            continue;
        }

        let mut results = Vec::with_capacity(n_batches);
        for b in 0..n_batches {
            results.push(run_one(b, clock)?);
        }
        scatter_all(results, &mut next, &mut trace);
        owned = Some(next);
    }

    // A zero-layer model is rejected at construction, so the loop ran.
    Ok(SampledRun {
        output: owned.unwrap(),
        trace,
    })
}

fn check_run_shapes(g: &CsrGraph, x: &FeatureMatrix, model: &GcnModel) -> Result<()> {
    if x.num_rows() != g.num_vertices() {
        return Err(Error::shape(format!(
            "feature matrix has {} rows for a graph with {} vertices",
            x.num_rows(),
            g.num_vertices()
        )));
    }
    model.check_workload(g.num_vertices() as u64, x.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::full_graph_inference;
    use crate::features::gen_features;
    use crate::generate::{gen_random_graph, GraphModel};

    fn star_into_center() -> CsrGraph {
        // Leaves 1..=9 each point at center 0.
        let edges: Vec<(u32, u32)> = (1..=9).map(|l| (l, 0)).collect();
        CsrGraph::from_edges(10, &edges).unwrap()
    }

    #[test]
    fn expansion_on_star_reaches_center_only() {
        let g = star_into_center();
        assert_eq!(expand_neighborhood(&g, &[1], 2).unwrap(), vec![0, 1]);
        // From the center nothing is reachable.
        assert_eq!(expand_neighborhood(&g, &[0], 3).unwrap(), vec![0]);
        // Duplicate seeds collapse; out-of-range seeds error.
        assert_eq!(expand_neighborhood(&g, &[2, 2, 1], 0).unwrap(), vec![1, 2]);
        assert!(matches!(
            expand_neighborhood(&g, &[42], 1),
            Err(Error::Bounds { .. })
        ));
    }

    #[test]
    fn expansion_matches_reference_bfs() {
        let g = gen_random_graph(GraphModel::Rmat, 300, 1500, 5).unwrap();
        for (seed_lo, hops) in [(0u32, 0usize), (10, 1), (50, 2), (7, 3)] {
            let seeds: Vec<u32> = (seed_lo..seed_lo + 12).collect();
            let got = expand_neighborhood(&g, &seeds, hops).unwrap();
            let want: Vec<u32> = crate::reference::reference_khop(&g, &seeds, hops)
                .into_iter()
                .collect();
            assert_eq!(got, want, "hops {hops}");
        }
    }

    #[test]
    fn batchwise_plans_partition_targets_and_nest_sets() {
        let g = gen_random_graph(GraphModel::ErdosRenyi, 100, 600, 2).unwrap();
        let model = GcnModel::seeded(&[4, 4, 4], false, Aggregation::Sum, 1).unwrap();
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, 32).unwrap();
        let plans = plan_batchwise(&g, &cfg, &model).unwrap();
        assert_eq!(plans.len(), 4);
        let mut covered: Vec<u32> = Vec::new();
        for plan in &plans {
            covered.extend_from_slice(plan.targets());
            assert_eq!(plan.layer_sets.len(), model.num_layers() + 1);
            for pair in plan.layer_sets.windows(2) {
                assert!(
                    pair[0].iter().all(|v| pair[1].binary_search(v).is_ok()),
                    "layer sets must be nested"
                );
            }
            for set in &plan.layer_sets {
                assert!(set.windows(2).all(|w| w[0] < w[1]), "sets ascend");
            }
        }
        assert_eq!(covered, (0..100).collect::<Vec<u32>>());
    }

    #[test]
    fn papers_scale_batch_count() {
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, 64).unwrap();
        assert_eq!(cfg.num_batches(111_059_956), 1_735_312);
    }

    #[test]
    fn subgraph_rows_mirror_global_rows() {
        let g = gen_random_graph(GraphModel::ErdosRenyi, 80, 400, 9).unwrap();
        let model = GcnModel::seeded(&[4, 4, 4], true, Aggregation::SymNorm, 1).unwrap();
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, 16).unwrap();
        let degrees = effective_degrees(&g, true);
        for plan in plan_batchwise(&g, &cfg, &model).unwrap() {
            let with_edges = &plan.layer_sets[plan.layer_sets.len() - 2];
            let mut checked_edges = 0;
            for &v in plan.expanded() {
                let local = plan.global_to_local(v).unwrap();
                let row = plan.subgraph.neighbors(local);
                if with_edges.binary_search(&v).is_ok() {
                    let global_row: Vec<u32> = g
                        .neighbors(v)
                        .iter()
                        .map(|&u| plan.global_to_local(u).expect("neighbor must be expanded"))
                        .collect();
                    assert_eq!(row, &global_row[..], "row of vertex {v}");
                    // Coefficients must equal the full-graph values bit for bit.
                    let lo = plan.subgraph.row_offsets()[local as usize];
                    for (k, &u) in g.neighbors(v).iter().enumerate() {
                        let want =
                            edge_coeff(Aggregation::SymNorm, degrees[v as usize], degrees[u as usize]);
                        assert_eq!(plan.coeffs.per_edge()[lo + k].to_bits(), want.to_bits());
                    }
                    checked_edges += row.len();
                } else {
                    assert!(row.is_empty(), "non-aggregating vertex {v} must have no row");
                }
            }
            assert_eq!(checked_edges, plan.subgraph.num_edges());
        }
    }

    #[test]
    fn layerwise_plans_expand_one_hop_per_layer() {
        let g = gen_random_graph(GraphModel::ErdosRenyi, 60, 240, 4).unwrap();
        let model = GcnModel::seeded(&[4, 8, 4], false, Aggregation::Mean, 1).unwrap();
        let cfg = SamplingConfig::new(SamplingMode::LayerWise, 25).unwrap();
        for li in 0..model.num_layers() {
            let plans = plan_layerwise(&g, &cfg, &model, li).unwrap();
            assert_eq!(plans.len(), 3);
            for plan in &plans {
                assert_eq!(plan.layer, Some(li));
                assert_eq!(plan.layer_sets.len(), 2);
                let want = expand_neighborhood(&g, plan.targets(), 1).unwrap();
                assert_eq!(plan.expanded(), &want[..]);
            }
        }
        assert!(plan_layerwise(&g, &cfg, &model, 2).is_err());
        // A batch-wise config cannot drive the layer-wise planner.
        let bw = SamplingConfig::new(SamplingMode::BatchWise, 25).unwrap();
        assert!(matches!(
            plan_layerwise(&g, &bw, &model, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_batch_covers_whole_graph_and_matches_full_inference_exactly() {
        let g = gen_random_graph(GraphModel::ErdosRenyi, 200, 1600, 21).unwrap();
        let x = gen_features(200, 8, 22).unwrap();
        let model = GcnModel::seeded(&[8, 16, 4], true, Aggregation::SymNorm, 23).unwrap();
        let full = full_graph_inference(&g, &x, &model).unwrap();
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, 200).unwrap();
        let sampled = run_batchwise(&g, &x, &model, &cfg).unwrap();
        assert_eq!(full, sampled);
    }

    #[test]
    fn batchwise_is_bit_exact_across_modes_and_batch_sizes() {
        let g = gen_random_graph(GraphModel::Rmat, 257, 2100, 31).unwrap();
        let x = gen_features(257, 6, 32).unwrap();
        for agg in [Aggregation::Sum, Aggregation::Mean, Aggregation::SymNorm] {
            for self_loops in [false, true] {
                let model = GcnModel::seeded(&[6, 12, 5], self_loops, agg, 33).unwrap();
                let full = full_graph_inference(&g, &x, &model).unwrap();
                for b in [1usize, 7, 64, 300] {
                    let cfg = SamplingConfig::new(SamplingMode::BatchWise, b).unwrap();
                    let sampled = run_batchwise(&g, &x, &model, &cfg).unwrap();
                    assert_eq!(full, sampled, "agg {agg:?} loops {self_loops} b {b}");
                }
            }
        }
    }

    #[test]
    fn layerwise_is_bit_exact_and_traces_each_layer() {
        let g = gen_random_graph(GraphModel::ErdosRenyi, 150, 900, 41).unwrap();
        let x = gen_features(150, 5, 42).unwrap();
        for agg in [Aggregation::Sum, Aggregation::Mean, Aggregation::SymNorm] {
            let model = GcnModel::seeded(&[5, 9, 7, 3], true, agg, 43).unwrap();
            let full = full_graph_inference(&g, &x, &model).unwrap();
            let cfg = SamplingConfig::new(SamplingMode::LayerWise, 40).unwrap();
            let run = run_layerwise_clocked(
                &g,
                &x,
                &model,
                &cfg,
                &mut KernelClock::disabled(),
                true,
            )
            .unwrap();
            assert_eq!(full, run.output, "agg {agg:?}");
            // One record per (layer, batch): sampling happens for every pair.
            assert_eq!(run.trace.len(), model.num_layers() * 4);
            let layers: std::collections::BTreeSet<_> =
                run.trace.iter().map(|r| r.layer.unwrap()).collect();
            assert_eq!(layers.len(), model.num_layers(), "one checkpoint per layer");
            // Layer-wise steps never expand beyond one hop of their targets.
            for rec in &run.trace {
                assert!(rec.expanded <= g.num_vertices());
                assert!(rec.targets <= 40);
            }
        }
    }

    #[test]
    fn batchwise_trace_reports_movement_per_batch() {
        let g = star_into_center();
        let x = gen_features(10, 3, 1).unwrap();
        let model = GcnModel::seeded(&[3, 4, 2], false, Aggregation::Sum, 2).unwrap();
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, 5).unwrap();
        let run = run_batchwise_clocked(&g, &x, &model, &cfg, &mut KernelClock::disabled(), true)
            .unwrap();
        assert_eq!(run.trace.len(), 2);
        let first = &run.trace[0];
        // Targets 0..5: the star center plus four leaves; every leaf pulls
        // in the center, which adds nothing new.
        assert_eq!(first.targets, 5);
        assert_eq!(first.expanded, 5);
        assert_eq!(first.bytes_in, 5 * 3 * 4);
        assert_eq!(first.bytes_out, 5 * 2 * 4);
        // Second batch: leaves 5..10 plus the center.
        assert_eq!(run.trace[1].expanded, 6);
    }

    #[test]
    fn disconnected_vertices_still_get_outputs() {
        // Vertices 3 and 4 are isolated.
        let g = CsrGraph::from_edges(5, &[(0, 1), (1, 2)]).unwrap();
        let x = gen_features(5, 4, 3).unwrap();
        let model = GcnModel::seeded(&[4, 4], false, Aggregation::Mean, 4).unwrap();
        let full = full_graph_inference(&g, &x, &model).unwrap();
        for mode in [SamplingMode::BatchWise, SamplingMode::LayerWise] {
            let cfg = SamplingConfig::new(mode, 2).unwrap();
            let y = match mode {
                SamplingMode::BatchWise => run_batchwise(&g, &x, &model, &cfg).unwrap(),
                SamplingMode::LayerWise => run_layerwise(&g, &x, &model, &cfg).unwrap(),
            };
            assert_eq!(full, y);
            assert_eq!(y.row(3), &[0.0; 4], "isolated vertex aggregates to zero");
        }
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        assert!(matches!(
            SamplingConfig::new(SamplingMode::BatchWise, 0),
            Err(Error::Config(_))
        ));
    }
}
