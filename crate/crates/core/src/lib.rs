//! Exact mini-batch inference for graph convolutional networks, an
//! analytical host/accelerator offload cost model, and a benchmarking
//! harness that reports kernel-level execution-time breakdowns.
//!
//! The samplers here trade nothing for batching: batch-wise multi-hop
//! expansion and layer-wise 1-hop expansion both reproduce full-graph
//! inference outputs bit-for-bit, so the interesting question becomes
//! what that exactness costs — neighborhood growth, data movement, and
//! device memory — which the cost model quantifies without needing the
//! accelerator to exist.
//!
//! Modules:
//! - [`graph`]: CSR adjacency, binary container, edge-list parsing, stats.
//! - [`features`]: dense row-major f32 feature matrices.
//! - [`generate`]: seeded uniform and power-law-ish random graphs.
//! - [`engine`]: the GCN forward pass and its kernels.
//! - [`sampler`]: exact batch-wise and layer-wise mini-batch execution.
//! - [`cost`]: movement, footprint, and transfer-time estimators.
//! - [`clock`] / [`bench`]: kernel timing and breakdown reports.
//! - [`trace`]: per-batch data-movement records.

pub mod bench;
pub mod clock;
pub mod cost;
pub mod engine;
pub mod error;
pub mod features;
pub mod generate;
pub mod graph;
pub mod sampler;
pub mod trace;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use bench::{
    compare_speedup, emit_report, run_characterization, run_sweep, BreakdownReport,
    CategorySeconds, PipelineMode, Report, ReportFormat, RunMetadata, RunOutput, RunSpec,
    SweepEntry, SweepOutcome, SweepResult, SweepTemplate,
};
pub use clock::{KernelCategory, KernelClock};
pub use cost::{
    est_batchwise_expansion, est_batchwise_footprint, est_batchwise_movement,
    est_fullgraph_offload, est_layerwise_expansion, est_layerwise_footprint,
    est_layerwise_movement, max_batch_size, CostReport, DeviceModel, FootprintBreakdown,
    WorkloadSpec,
};
pub use engine::{
    build_norm_coefficients, dense_mm, full_graph_inference, full_graph_inference_clocked, relu,
    spmm, Aggregation, GcnModel, LayerWeights, NormCoefficients,
};
pub use error::{Error, Result};
pub use features::{gen_features, FeatureMatrix};
pub use generate::{gen_random_graph, GraphModel};
pub use graph::{compute_stats, load_edge_list, CsrGraph, GraphStats, VertexId};
pub use sampler::{
    expand_neighborhood, plan_batchwise, plan_layerwise, run_batchwise, run_batchwise_clocked,
    run_layerwise, run_layerwise_clocked, MiniBatchPlan, SampledRun, SamplingConfig, SamplingMode,
};
pub use trace::{write_trace_jsonl, TraceRecord};
