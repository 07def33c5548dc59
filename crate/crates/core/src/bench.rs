//! Kernel-level execution-time characterization.
//!
//! A run executes a pipeline `reps` times, measures SpMM, dense update,
//! and sampling directly, derives glue as the unattributed remainder of
//! wall time, and adds an analytically modeled offload term (never a
//! measured one — there is no accelerator here, which is the point of
//! modeling it). The rep with the median wall time is reported, so the
//! five categories always sum exactly to the reported total.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clock::{KernelCategory, KernelClock};
use crate::cost::{
    est_batchwise_movement, est_fullgraph_offload, est_layerwise_movement, CostReport, DeviceModel,
    WorkloadSpec,
};
use crate::engine::{full_graph_inference_clocked, Aggregation, GcnModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{compute_stats, CsrGraph, GraphStats};
use crate::sampler::{
    run_batchwise_clocked, run_layerwise_clocked, SamplingConfig, SamplingMode,
};
use crate::trace::TraceRecord;

/// Which pipeline a characterization drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    Full,
    BatchWise,
    LayerWise,
}

impl PipelineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Full => "full",
            PipelineMode::BatchWise => "batch-wise",
            PipelineMode::LayerWise => "layer-wise",
        }
    }

    pub fn sampling_mode(self) -> Option<SamplingMode> {
        match self {
            PipelineMode::Full => None,
            PipelineMode::BatchWise => Some(SamplingMode::BatchWise),
            PipelineMode::LayerWise => Some(SamplingMode::LayerWise),
        }
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "full-graph" | "fullgraph" => Ok(PipelineMode::Full),
            "batch-wise" | "batchwise" | "batch_wise" => Ok(PipelineMode::BatchWise),
            "layer-wise" | "layerwise" | "layer_wise" => Ok(PipelineMode::LayerWise),
            other => Err(Error::config(format!(
                "unknown pipeline mode {other:?} (expected full, batch-wise, or layer-wise)"
            ))),
        }
    }
}

/// Seconds per category. Fractions use the same shape.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategorySeconds {
    pub spmm: f64,
    pub dense_mm: f64,
    pub glue: f64,
    pub offload: f64,
    pub sampling: f64,
}

impl CategorySeconds {
    pub fn get(&self, cat: KernelCategory) -> f64 {
        match cat {
            KernelCategory::Spmm => self.spmm,
            KernelCategory::DenseMm => self.dense_mm,
            KernelCategory::Glue => self.glue,
            KernelCategory::Offload => self.offload,
            KernelCategory::Sampling => self.sampling,
        }
    }

    pub fn total(&self) -> f64 {
        self.spmm + self.dense_mm + self.glue + self.offload + self.sampling
    }

    fn fractions(&self, total: f64) -> CategorySeconds {
        if total <= 0.0 {
            return CategorySeconds::default();
        }
        CategorySeconds {
            spmm: self.spmm / total,
            dense_mm: self.dense_mm / total,
            glue: self.glue / total,
            offload: self.offload / total,
            sampling: self.sampling / total,
        }
    }
}

/// Everything needed to reproduce and interpret a breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub mode: PipelineMode,
    pub aggregation: Aggregation,
    pub self_loops: bool,
    pub layer_dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub repetitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub graph: GraphStats,
    /// Offload seconds are always modeled, never measured; this flag
    /// travels with the report to keep that unambiguous.
    pub offload_modeled: bool,
    /// Set when the measured wall time is too small to attribute
    /// meaningfully (under a microsecond).
    pub precision_warning: bool,
    pub threads: usize,
    /// FNV-1a over the little-endian output activations: two runs with
    /// equal inputs must produce equal checksums.
    pub output_checksum: String,
}

/// A kernel-level execution-time breakdown for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub seconds: CategorySeconds,
    pub fractions: CategorySeconds,
    pub total_seconds: f64,
    pub metadata: RunMetadata,
}

impl BreakdownReport {
    pub fn fraction(&self, cat: KernelCategory) -> f64 {
        self.fractions.get(cat)
    }
}

/// Characterization parameters.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub mode: PipelineMode,
    /// Required for the sampled modes, ignored for full-graph.
    pub batch_size: Option<usize>,
    pub reps: usize,
    /// Recorded in metadata for provenance; does not influence execution.
    pub seed: Option<u64>,
    /// Overrides the measured `E / V` in the offload cost model.
    pub avg_degree_override: Option<f64>,
    /// Collect per-batch trace records (first rep only).
    pub want_trace: bool,
}

impl RunSpec {
    pub fn new(mode: PipelineMode, reps: usize) -> Self {
        RunSpec {
            mode,
            batch_size: None,
            reps,
            seed: None,
            avg_degree_override: None,
            want_trace: false,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = Some(batch_size);
        self
    }
}

/// A characterization result: the breakdown, the cost-model report that
/// produced the modeled offload term (when a device was given), and the
/// trace of the first repetition (when requested).
pub struct RunOutput {
    pub report: BreakdownReport,
    pub cost: Option<CostReport>,
    pub trace: Vec<TraceRecord>,
}

struct RepResult {
    wall: f64,
    spmm: f64,
    dense_mm: f64,
    sampling: f64,
    checksum: u64,
}

/// Runs one configuration and reports its execution-time breakdown.
///
/// Offload needs a device model; without one the offload category is
/// zero and `offload_modeled` is false. For the full-graph mode a device
/// whose memory cannot hold the working set is a capacity error — the
/// graph must be sampled instead.
pub fn run_characterization(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    spec: &RunSpec,
    dev: Option<&DeviceModel>,
) -> Result<RunOutput> {
    if spec.reps == 0 {
        return Err(Error::config("at least one repetition is required"));
    }
    let stats = compute_stats(g)?;
    let dims_u64: Vec<u64> = model.dims().iter().map(|&d| d as u64).collect();

    let sampling_cfg = match spec.mode.sampling_mode() {
        Some(mode) => {
            let b = spec.batch_size.ok_or_else(|| {
                Error::config("sampled modes need a batch size")
            })?;
            Some(SamplingConfig::new(mode, b)?)
        }
        None => None,
    };

    // The modeled offload term and its provenance.
    let cost = match dev {
        None => None,
        Some(dev) => Some(match spec.mode {
            PipelineMode::Full => est_fullgraph_offload(&stats, &dims_u64, dev)?,
            PipelineMode::BatchWise | PipelineMode::LayerWise => {
                let cfg = sampling_cfg.as_ref().unwrap();
                let mut w = WorkloadSpec::from_stats(
                    &stats,
                    dims_u64.clone(),
                    (cfg.batch_size as u64).min(stats.num_vertices),
                    cfg.mode,
                )?;
                if let Some(d) = spec.avg_degree_override {
                    w = w.with_avg_degree(d)?;
                }
                let report = match cfg.mode {
                    SamplingMode::BatchWise => est_batchwise_movement(&w, dev)?,
                    SamplingMode::LayerWise => est_layerwise_movement(&w, dev)?,
                };
                if report.peak_device_footprint_bytes > dev.memory_capacity {
                    return Err(Error::capacity(format!(
                        "a {} mini-batch needs {} against a device capacity of {}; \
                         reduce the batch size",
                        cfg.mode.as_str(),
                        crate::cost::human_bytes(report.peak_device_footprint_bytes),
                        crate::cost::human_bytes(dev.memory_capacity),
                    )));
                }
                report
            }
        }),
    };
    let offload_seconds = cost.as_ref().map_or(0.0, |c| c.est_transfer_seconds);

    let mut reps: Vec<RepResult> = Vec::with_capacity(spec.reps);
    let mut trace: Vec<TraceRecord> = Vec::new();
    for rep in 0..spec.reps {
        let mut clock = KernelClock::enabled();
        let want_trace = spec.want_trace && rep == 0;
        let start = Instant::now();
        let (output, rep_trace) = match spec.mode {
            PipelineMode::Full => {
                (full_graph_inference_clocked(g, x, model, &mut clock)?, Vec::new())
            }
            PipelineMode::BatchWise => {
                let run = run_batchwise_clocked(
                    g,
                    x,
                    model,
                    sampling_cfg.as_ref().unwrap(),
                    &mut clock,
                    want_trace,
                )?;
                (run.output, run.trace)
            }
            PipelineMode::LayerWise => {
                let run = run_layerwise_clocked(
                    g,
                    x,
                    model,
                    sampling_cfg.as_ref().unwrap(),
                    &mut clock,
                    want_trace,
                )?;
                (run.output, run.trace)
            }
        };
        let wall = start.elapsed().as_secs_f64();
        if want_trace {
            trace = rep_trace;
        }
        reps.push(RepResult {
            wall,
            spmm: clock.seconds(KernelCategory::Spmm),
            dense_mm: clock.seconds(KernelCategory::DenseMm),
            sampling: clock.seconds(KernelCategory::Sampling),
            checksum: fnv1a64_f32(output.values()),
        });
    }
    debug_assert!(
        reps.windows(2).all(|w| w[0].checksum == w[1].checksum),
        "repetitions of a deterministic pipeline diverged"
    );

    // The rep with the median wall time, categories taken as a unit from
    // the same rep so they always add up.
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| reps[a].wall.total_cmp(&reps[b].wall));
    let chosen = &reps[order[order.len() / 2]];

    let glue = (chosen.wall - chosen.spmm - chosen.dense_mm - chosen.sampling).max(0.0);
    let seconds = CategorySeconds {
        spmm: chosen.spmm,
        dense_mm: chosen.dense_mm,
        glue,
        offload: offload_seconds,
        sampling: chosen.sampling,
    };
    let total_seconds = chosen.wall + offload_seconds;
    let report = BreakdownReport {
        seconds,
        fractions: seconds.fractions(total_seconds),
        total_seconds,
        metadata: RunMetadata {
            mode: spec.mode,
            aggregation: model.aggregation(),
            self_loops: model.self_loops(),
            layer_dims: model.dims(),
            batch_size: sampling_cfg.map(|c| c.batch_size),
            repetitions: spec.reps,
            seed: spec.seed,
            graph: stats,
            offload_modeled: dev.is_some(),
            precision_warning: chosen.wall < 1e-6,
            threads: current_threads(),
            output_checksum: format!("{:016x}", chosen.checksum),
        },
    };
    Ok(RunOutput {
        report,
        cost,
        trace,
    })
}

/// Model shape shared by every point of a dimension sweep.
#[derive(Clone, Debug)]
pub struct SweepTemplate {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Number of layers; the swept dimension fills the hidden positions.
    pub depth: usize,
    pub aggregation: Aggregation,
    pub self_loops: bool,
    pub weight_seed: u64,
}

impl SweepTemplate {
    fn dims_for(&self, hidden: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.depth + 1);
        dims.push(self.input_dim);
        dims.extend(std::iter::repeat_n(hidden, self.depth - 1));
        dims.push(self.output_dim);
        dims
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SweepOutcome {
    Feasible {
        breakdown: BreakdownReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        cost: Option<CostReport>,
    },
    /// The dimension point does not fit the device model; the sweep
    /// continues past it.
    Infeasible { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub embedding_dim: usize,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

/// Characterizes the same pipeline across an ascending chain of hidden
/// dimensions, regenerating weights per point from the template seed.
pub fn run_sweep(
    g: &CsrGraph,
    x: &FeatureMatrix,
    tpl: &SweepTemplate,
    hidden_dims: &[usize],
    run: &RunSpec,
    dev: Option<&DeviceModel>,
) -> Result<SweepResult> {
    if tpl.depth < 2 {
        return Err(Error::config(
            "a dimension sweep needs depth >= 2 so the hidden dimension exists",
        ));
    }
    if hidden_dims.is_empty() {
        return Err(Error::config("sweep needs at least one hidden dimension"));
    }
    if !hidden_dims.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::config("sweep dimensions must be strictly increasing"));
    }
    if x.dim() != tpl.input_dim {
        return Err(Error::shape(format!(
            "sweep features have dimension {} but the template expects {}",
            x.dim(),
            tpl.input_dim
        )));
    }
    let mut entries = Vec::with_capacity(hidden_dims.len());
    for &hidden in hidden_dims {
        let model = GcnModel::seeded(
            &tpl.dims_for(hidden),
            tpl.self_loops,
            tpl.aggregation,
            tpl.weight_seed,
        )?;
        let spec = RunSpec {
            want_trace: false,
            ..run.clone()
        };
        let outcome = match run_characterization(g, x, &model, &spec, dev) {
            Ok(out) => SweepOutcome::Feasible {
                breakdown: out.report,
                cost: out.cost,
            },
            Err(Error::Capacity(reason)) => SweepOutcome::Infeasible { reason },
            Err(e) => return Err(e),
        };
        entries.push(SweepEntry {
            embedding_dim: hidden,
            outcome,
        });
    }
    Ok(SweepResult { entries })
}

/// Ratio of total times `a / b` for two breakdowns of the same workload
/// (same graph and dimension chain). Above 1.0 means `b` is faster.
pub fn compare_speedup(a: &BreakdownReport, b: &BreakdownReport) -> Result<f64> {
    if a.metadata.graph != b.metadata.graph || a.metadata.layer_dims != b.metadata.layer_dims {
        return Err(Error::config(
            "speedup comparison needs reports for the same graph and dimension chain",
        ));
    }
    if b.total_seconds <= 0.0 {
        return Err(Error::config("denominator report has no measurable total"));
    }
    Ok(a.total_seconds / b.total_seconds)
}

/// A report artifact: either one breakdown or a whole sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Breakdown(BreakdownReport),
    Sweep(SweepResult),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::config(format!(
                "unknown report format {other:?} (expected json or csv)"
            ))),
        }
    }
}

/// Serializes a report to a writer. JSON round-trips through serde; CSV
/// flattens to one row per category (and per sweep point).
pub fn write_report(report: &Report, format: ReportFormat, w: &mut impl Write) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *w, report)
                .map_err(|e| Error::format(format!("report serialization: {e}")))?;
            w.write_all(b"\n")?;
        }
        ReportFormat::Csv => match report {
            Report::Breakdown(b) => {
                writeln!(w, "category,seconds,fraction,total_seconds")?;
                for cat in KernelCategory::ALL {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        cat.as_str(),
                        b.seconds.get(cat),
                        b.fractions.get(cat),
                        b.total_seconds
                    )?;
                }
            }
            Report::Sweep(s) => {
                writeln!(w, "embedding_dim,status,category,seconds,fraction,total_seconds")?;
                for entry in &s.entries {
                    match &entry.outcome {
                        SweepOutcome::Feasible { breakdown, .. } => {
                            for cat in KernelCategory::ALL {
                                writeln!(
                                    w,
                                    "{},feasible,{},{},{},{}",
                                    entry.embedding_dim,
                                    cat.as_str(),
                                    breakdown.seconds.get(cat),
                                    breakdown.fractions.get(cat),
                                    breakdown.total_seconds
                                )?;
                            }
                        }
                        SweepOutcome::Infeasible { .. } => {
                            writeln!(w, "{},infeasible,,,,", entry.embedding_dim)?;
                        }
                    }
                }
            }
        },
    }
    Ok(())
}

/// Writes a report file in the given format.
pub fn emit_report(report: &Report, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut w)?;
    w.flush()?;
    Ok(())
}

/// FNV-1a over the little-endian bytes of an f32 slice.
fn fnv1a64_f32(values: &[f32]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for v in values {
        for b in v.to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(PRIME);
        }
    }
    hash
}

/// Rayon pool width, or 1 for single-threaded builds.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Caps the global thread pool from `GCNBENCH_THREADS` when set. Call
/// once at startup, before any parallel work; later calls are ignored
/// because the global pool is already built.
pub fn init_thread_limit_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(raw) = std::env::var("GCNBENCH_THREADS") {
            if let Ok(n) = raw.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    }
}
