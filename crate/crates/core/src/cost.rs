//! Analytical CPU-accelerator offload cost model.
//!
//! Byte counts are computed in exact integer arithmetic (u128
//! intermediates, checked narrowing); only the neighborhood-expansion
//! estimates go through f64, since the average degree itself is
//! fractional. Transfer times divide total movement by link bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphStats;
use crate::sampler::SamplingMode;

/// Accelerator-side budget and link characteristics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceModel {
    /// Device memory, bytes.
    pub memory_capacity: u64,
    /// Host-device link bandwidth, bytes per second.
    pub link_bandwidth: u64,
    /// Width of one feature element, bytes.
    pub element_size: u64,
}

impl DeviceModel {
    /// 4-byte elements by default; matches f32 features.
    pub fn new(memory_capacity: u64, link_bandwidth: u64) -> Result<Self> {
        DeviceModel {
            memory_capacity,
            link_bandwidth,
            element_size: 4,
        }
        .validated()
    }

    pub fn with_element_size(mut self, element_size: u64) -> Result<Self> {
        self.element_size = element_size;
        self.validated()
    }

    /// A 40 GB accelerator behind a 32 GB/s host link.
    pub fn default_accelerator() -> Self {
        DeviceModel {
            memory_capacity: 40_000_000_000,
            link_bandwidth: 32_000_000_000,
            element_size: 4,
        }
    }

    fn validated(self) -> Result<Self> {
        if self.link_bandwidth == 0 {
            return Err(Error::config("link bandwidth must be positive"));
        }
        if self.element_size == 0 {
            return Err(Error::config("element size must be positive"));
        }
        Ok(self)
    }
}

/// The shape of a sampled inference workload, sufficient for every
/// estimator: graph scale, degree structure, model dimension chain, and
/// mini-batch size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub num_vertices: u64,
    /// Average out-degree used for expansion estimates. Defaults to
    /// `E / V` when built from graph statistics; override to model
    /// assumed connectivity.
    pub avg_degree: f64,
    /// `[d_in, h_1, ..., d_out]`, at least two entries.
    pub layer_dims: Vec<u64>,
    pub batch_size: u64,
    pub mode: SamplingMode,
}

impl WorkloadSpec {
    pub fn new(
        num_vertices: u64,
        avg_degree: f64,
        layer_dims: Vec<u64>,
        batch_size: u64,
        mode: SamplingMode,
    ) -> Result<Self> {
        let w = WorkloadSpec {
            num_vertices,
            avg_degree,
            layer_dims,
            batch_size,
            mode,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn from_stats(
        stats: &GraphStats,
        layer_dims: Vec<u64>,
        batch_size: u64,
        mode: SamplingMode,
    ) -> Result<Self> {
        WorkloadSpec::new(
            stats.num_vertices,
            stats.avg_degree,
            layer_dims,
            batch_size,
            mode,
        )
    }

    pub fn with_avg_degree(mut self, avg_degree: f64) -> Result<Self> {
        self.avg_degree = avg_degree;
        self.validate()?;
        Ok(self)
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Result<Self> {
        self.batch_size = batch_size;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.num_vertices == 0 {
            return Err(Error::config("workload needs at least one vertex"));
        }
        if !(self.avg_degree.is_finite() && self.avg_degree >= 0.0) {
            return Err(Error::config("average degree must be finite and non-negative"));
        }
        if self.layer_dims.len() < 2 {
            return Err(Error::config(
                "layer dimension chain needs an input and an output entry",
            ));
        }
        if self.layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::config("layer dimensions must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.batch_size > self.num_vertices {
            return Err(Error::config(format!(
                "batch size {} exceeds the vertex count {}",
                self.batch_size, self.num_vertices
            )));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> u64 {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> u64 {
        *self.layer_dims.last().unwrap()
    }

    /// Largest `d_in + d_out` over the layer boundaries: the widest pair
    /// of activation buffers resident at once.
    pub fn max_boundary_dims(&self) -> u64 {
        self.layer_dims
            .windows(2)
            .map(|w| w[0] + w[1])
            .max()
            .unwrap()
    }

    /// Total weight bytes of the dimension chain.
    pub fn weight_bytes(&self, element_size: u64) -> Result<u64> {
        let mut total: u128 = 0;
        for w in self.layer_dims.windows(2) {
            total += w[0] as u128 * w[1] as u128 * element_size as u128;
        }
        narrow(total)
    }

    fn expect_mode(&self, mode: SamplingMode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::config(format!(
                "workload is specified for {} sampling, not {}",
                self.mode.as_str(),
                mode.as_str()
            )))
        }
    }
}

/// Multiplies a count by a fractional factor, rounding up.
fn ceil_mul(n: u64, f: f64) -> u64 {
    let x = n as f64 * f;
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

fn narrow(x: u128) -> Result<u64> {
    u64::try_from(x).map_err(|_| Error::capacity("byte count overflows 64 bits"))
}

/// `ceil(V / b)`: how many contiguous batches cover the vertex set.
pub fn num_batches(num_vertices: u64, batch_size: u64) -> Result<u64> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    Ok(num_vertices.div_ceil(batch_size))
}

/// D-hop expansion of one batch, `ceil(b * avg_degree^D)`, without the
/// vertex-count cap. Grows geometrically in depth.
pub fn est_batchwise_expansion_uncapped(w: &WorkloadSpec) -> Result<u64> {
    w.validate()?;
    w.expect_mode(SamplingMode::BatchWise)?;
    Ok(ceil_mul(w.batch_size, w.avg_degree.powi(w.num_layers() as i32)))
}

/// D-hop expansion of one batch, capped at the vertex count: an expanded
/// set can never exceed the graph.
pub fn est_batchwise_expansion(w: &WorkloadSpec) -> Result<u64> {
    Ok(est_batchwise_expansion_uncapped(w)?.min(w.num_vertices))
}

/// 1-hop expansion of one layer-wise batch, `ceil(b * (avg_degree + 1))`
/// capped at the vertex count (targets plus their out-neighbors).
pub fn est_layerwise_expansion(w: &WorkloadSpec) -> Result<u64> {
    w.validate()?;
    w.expect_mode(SamplingMode::LayerWise)?;
    Ok(ceil_mul(w.batch_size, w.avg_degree + 1.0).min(w.num_vertices))
}

/// Serialized size of a subgraph over `n` vertices with `avg_degree`
/// edges per vertex: 64-bit offsets plus 32-bit columns.
fn est_subgraph_adjacency_bytes(n: u64, avg_degree: f64) -> Result<u64> {
    let offsets = (n as u128 + 1) * 8;
    let edges = ceil_mul(n, avg_degree) as u128 * 4;
    narrow(offsets + edges)
}

/// Device-resident footprint split by what occupies the memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintBreakdown {
    /// Activation buffers: expanded rows times the widest layer boundary.
    pub activation_bytes: u64,
    /// All model weights, resident for the whole run.
    pub weight_bytes: u64,
    /// The extracted subgraph structure.
    pub adjacency_bytes: u64,
}

impl FootprintBreakdown {
    pub fn total_bytes(&self) -> u64 {
        self.activation_bytes + self.weight_bytes + self.adjacency_bytes
    }
}

fn footprint_for_expansion(w: &WorkloadSpec, dev: &DeviceModel, expanded: u64) -> Result<FootprintBreakdown> {
    let activation = narrow(expanded as u128 * w.max_boundary_dims() as u128 * dev.element_size as u128)?;
    Ok(FootprintBreakdown {
        activation_bytes: activation,
        weight_bytes: w.weight_bytes(dev.element_size)?,
        adjacency_bytes: est_subgraph_adjacency_bytes(expanded, w.avg_degree)?,
    })
}

/// Peak device footprint of one batch-wise mini-batch.
pub fn est_batchwise_footprint(w: &WorkloadSpec, dev: &DeviceModel) -> Result<FootprintBreakdown> {
    footprint_for_expansion(w, dev, est_batchwise_expansion(w)?)
}

/// Peak device footprint of one layer-wise step. `expanded` overrides the
/// 1-hop estimate with a known resident-set size.
pub fn est_layerwise_footprint(
    w: &WorkloadSpec,
    dev: &DeviceModel,
    expanded: Option<u64>,
) -> Result<FootprintBreakdown> {
    let n = match expanded {
        Some(n) => n.min(w.num_vertices),
        None => est_layerwise_expansion(w)?,
    };
    w.validate()?;
    footprint_for_expansion(w, dev, n)
}

/// Host-side working set: the full feature matrix and adjacency, plus the
/// two full-graph checkpoint buffers a layer-wise run keeps.
pub fn est_host_footprint(w: &WorkloadSpec, dev: &DeviceModel) -> Result<u64> {
    w.validate()?;
    let v = w.num_vertices as u128;
    let adjacency = (v + 1) * 8 + ceil_mul(w.num_vertices, w.avg_degree) as u128 * 4;
    let features = v * w.input_dim() as u128 * dev.element_size as u128;
    let checkpoints = match w.mode {
        SamplingMode::BatchWise => 0,
        SamplingMode::LayerWise => v * w.max_boundary_dims() as u128 * dev.element_size as u128,
    };
    narrow(adjacency + features + checkpoints)
}

/// Human-readable rendering of the headline figures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanSummary {
    pub bytes_per_batch: String,
    pub total_movement: String,
    pub peak_device_footprint: String,
    pub est_transfer: String,
}

/// Output of the movement estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// `batch-wise`, `layer-wise`, or `full-graph`.
    pub mode: String,
    pub num_batches: u64,
    pub expanded_per_batch: u64,
    /// Present for batch-wise reports: the geometric expansion before the
    /// vertex-count cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncapped_expansion_per_batch: Option<u64>,
    /// For layer-wise reports this is the widest layer's figure.
    pub bytes_per_batch: u64,
    pub adjacency_bytes_per_batch: u64,
    pub total_movement_bytes: u64,
    pub peak_device_footprint_bytes: u64,
    pub host_footprint_bytes: u64,
    pub est_transfer_seconds: f64,
    pub human: HumanSummary,
}

fn finish_report(
    mode: &str,
    batches: u64,
    expanded: u64,
    uncapped: Option<u64>,
    bytes_per_batch: u64,
    adjacency_per_batch: u64,
    total: u64,
    footprint: u64,
    host: u64,
    dev: &DeviceModel,
) -> CostReport {
    let est_transfer_seconds = total as f64 / dev.link_bandwidth as f64;
    CostReport {
        mode: mode.to_string(),
        num_batches: batches,
        expanded_per_batch: expanded,
        uncapped_expansion_per_batch: uncapped,
        bytes_per_batch,
        adjacency_bytes_per_batch: adjacency_per_batch,
        total_movement_bytes: total,
        peak_device_footprint_bytes: footprint,
        host_footprint_bytes: host,
        est_transfer_seconds,
        human: HumanSummary {
            bytes_per_batch: human_bytes(bytes_per_batch),
            total_movement: human_bytes(total),
            peak_device_footprint: human_bytes(footprint),
            est_transfer: human_seconds(est_transfer_seconds),
        },
    }
}

/// Total host-device movement of a batch-wise run.
///
/// Per batch: the expanded feature rows down, the target outputs back,
/// and the extracted subgraph structure down. Every batch is costed at
/// the full batch size, matching the uniform-batch arithmetic the
/// estimates are built on.
pub fn est_batchwise_movement(w: &WorkloadSpec, dev: &DeviceModel) -> Result<CostReport> {
    let expanded = est_batchwise_expansion(w)?;
    let uncapped = est_batchwise_expansion_uncapped(w)?;
    let es = dev.element_size as u128;
    let features_in = expanded as u128 * w.input_dim() as u128 * es;
    let features_out = w.batch_size as u128 * w.output_dim() as u128 * es;
    let adjacency = est_subgraph_adjacency_bytes(expanded, w.avg_degree)? as u128;
    let per_batch = narrow(features_in + features_out + adjacency)?;
    let batches = num_batches(w.num_vertices, w.batch_size)?;
    let total = narrow(per_batch as u128 * batches as u128)?;
    let footprint = est_batchwise_footprint(w, dev)?.total_bytes();
    let host = est_host_footprint(w, dev)?;
    Ok(finish_report(
        SamplingMode::BatchWise.as_str(),
        batches,
        expanded,
        Some(uncapped),
        per_batch,
        adjacency as u64,
        total,
        footprint,
        host,
        dev,
    ))
}

/// Total host-device movement of a layer-wise run: for every layer, every
/// batch moves its 1-hop expansion down and its targets' outputs back, so
/// checkpoints cross the link once per layer in each direction.
pub fn est_layerwise_movement(w: &WorkloadSpec, dev: &DeviceModel) -> Result<CostReport> {
    let expanded = est_layerwise_expansion(w)?;
    let es = dev.element_size as u128;
    let adjacency = est_subgraph_adjacency_bytes(expanded, w.avg_degree)? as u128;
    let batches = num_batches(w.num_vertices, w.batch_size)?;
    let mut total: u128 = 0;
    let mut widest_layer_bytes: u128 = 0;
    for pair in w.layer_dims.windows(2) {
        let features_in = expanded as u128 * pair[0] as u128 * es;
        let features_out = w.batch_size as u128 * pair[1] as u128 * es;
        let per_batch = features_in + features_out + adjacency;
        widest_layer_bytes = widest_layer_bytes.max(per_batch);
        total += per_batch * batches as u128;
    }
    let footprint = est_layerwise_footprint(w, dev, None)?.total_bytes();
    let host = est_host_footprint(w, dev)?;
    Ok(finish_report(
        SamplingMode::LayerWise.as_str(),
        batches,
        expanded,
        None,
        narrow(widest_layer_bytes)?,
        adjacency as u64,
        narrow(total)?,
        footprint,
        host,
        dev,
    ))
}

/// Movement and footprint of offloading the whole graph at once:
/// adjacency and input features down, final activations back. Errors when
/// the resident set exceeds device capacity, which is exactly the case
/// that motivates sampled execution.
pub fn est_fullgraph_offload(
    stats: &GraphStats,
    layer_dims: &[u64],
    dev: &DeviceModel,
) -> Result<CostReport> {
    if layer_dims.len() < 2 || layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::config(
            "layer dimension chain needs positive input and output entries",
        ));
    }
    let v = stats.num_vertices as u128;
    let es = dev.element_size as u128;
    let adjacency = (v + 1) * 8 + stats.num_edges as u128 * 4;
    let d_in = layer_dims[0] as u128;
    let d_out = *layer_dims.last().unwrap() as u128;
    let movement = narrow(adjacency + v * d_in * es + v * d_out * es)?;

    let max_boundary = layer_dims
        .windows(2)
        .map(|w| w[0] + w[1])
        .max()
        .unwrap() as u128;
    let weights: u128 = layer_dims
        .windows(2)
        .map(|w| w[0] as u128 * w[1] as u128 * es)
        .sum();
    let footprint = narrow(adjacency + v * max_boundary * es + weights)?;
    if footprint > dev.memory_capacity {
        return Err(Error::capacity(format!(
            "full-graph working set of {} exceeds device memory of {}; \
             a sampled schedule is required",
            human_bytes(footprint),
            human_bytes(dev.memory_capacity)
        )));
    }
    let host = narrow(adjacency + v * d_in * es)?;
    Ok(finish_report(
        "full-graph",
        1,
        stats.num_vertices,
        None,
        movement,
        narrow(adjacency)?,
        movement,
        footprint,
        host,
        dev,
    ))
}

/// Largest batch size whose per-batch footprint fits device memory, found
/// by bisection over the monotone footprint function. Errors when even a
/// single-vertex batch does not fit; returns `V` when no cap binds.
pub fn max_batch_size(w: &WorkloadSpec, dev: &DeviceModel) -> Result<u64> {
    w.validate()?;
    let footprint_at = |b: u64| -> Result<u64> {
        let probe = WorkloadSpec {
            batch_size: b,
            ..w.clone()
        };
        let fp = match w.mode {
            SamplingMode::BatchWise => est_batchwise_footprint(&probe, dev)?,
            SamplingMode::LayerWise => est_layerwise_footprint(&probe, dev, None)?,
        };
        Ok(fp.total_bytes())
    };
    if footprint_at(1)? > dev.memory_capacity {
        return Err(Error::capacity(format!(
            "even a single-vertex batch needs {} against a capacity of {}",
            human_bytes(footprint_at(1)?),
            human_bytes(dev.memory_capacity)
        )));
    }
    let (mut lo, mut hi) = (1u64, w.num_vertices);
    if footprint_at(hi)? <= dev.memory_capacity {
        return Ok(hi);
    }
    // Invariant: fits at lo, does not fit at hi.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if footprint_at(mid)? <= dev.memory_capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Decimal rendering with two fractional digits above one kilobyte.
pub fn human_bytes(bytes: impl Into<u128>) -> String {
    const UNITS: [&str; 7] = ["B", "KB", "MB", "GB", "TB", "PB", "EB"];
    let bytes = bytes.into();
    if bytes < 1000 {
        return format!("{bytes} B");
    }
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1000.0 && unit + 1 < UNITS.len() {
        value /= 1000.0;
        unit += 1;
    }
    format!("{value:.2} {}", UNITS[unit])
}

/// Seconds with an auto-selected scale.
pub fn human_seconds(s: f64) -> String {
    if !s.is_finite() {
        return "n/a".to_string();
    }
    if s >= 3600.0 {
        format!("{:.2} h", s / 3600.0)
    } else if s >= 1.0 {
        format!("{s:.2} s")
    } else if s >= 1e-3 {
        format!("{:.2} ms", s * 1e3)
    } else {
        format!("{:.2} us", s * 1e6)
    }
}
