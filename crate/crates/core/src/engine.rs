//! GCN building blocks: normalization coefficients, sparse and dense
//! matrix kernels, and the full-graph forward pipeline.
//!
//! Numerical reproducibility contract: every row is accumulated in a fixed
//! order (edges in ascending column order, then the optional self term),
//! in f32, regardless of thread count or of whether the row is computed in
//! a full-graph or a sampled pipeline. The samplers relabel vertices in
//! ascending global order, so a subgraph row visits the same values in the
//! same order as the corresponding full-graph row and produces the same
//! bits.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{KernelCategory, KernelClock};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::CsrGraph;

const MODEL_MAGIC: &[u8; 4] = b"GMDL";
const MODEL_VERSION: u32 = 1;

/// Neighborhood aggregation rule applied before each dense update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Plain sum over in-edges of the aggregating vertex's row.
    Sum,
    /// Sum scaled by `1/deg(v)`.
    Mean,
    /// Sum scaled by `1/sqrt(deg(v) * deg(u))` per edge.
    SymNorm,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::Mean => "mean",
            Aggregation::SymNorm => "sym-norm",
        }
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Aggregation::Sum),
            "mean" => Ok(Aggregation::Mean),
            "sym-norm" | "symnorm" | "sym_norm" => Ok(Aggregation::SymNorm),
            other => Err(Error::config(format!(
                "unknown aggregation {other:?} (expected sum, mean, or sym-norm)"
            ))),
        }
    }
}

/// Per-edge scale for one edge `v -> u` aggregated at `v`, from the
/// degrees `dv` and `du`. Zero-degree endpoints scale to zero rather than
/// dividing by zero. Shared by the full-graph and sampled paths so the
/// two produce identical f32 coefficients.
#[inline]
pub(crate) fn edge_coeff(mode: Aggregation, dv: u64, du: u64) -> f32 {
    match mode {
        Aggregation::Sum => 1.0,
        Aggregation::Mean => {
            if dv == 0 {
                0.0
            } else {
                1.0 / dv as f32
            }
        }
        Aggregation::SymNorm => {
            if dv == 0 || du == 0 {
                0.0
            } else {
                (1.0 / ((dv as f64) * (du as f64)).sqrt()) as f32
            }
        }
    }
}

/// Scale of the implicit self edge `v -> v` contributed by the model-level
/// self-loop flag. Under sym-norm the self edge is `1/sqrt(dv * dv)`.
#[inline]
pub(crate) fn self_coeff(mode: Aggregation, dv: u64) -> f32 {
    match mode {
        Aggregation::Sum => 1.0,
        Aggregation::Mean | Aggregation::SymNorm => {
            if dv == 0 {
                0.0
            } else {
                (1.0 / dv as f64) as f32
            }
        }
    }
}

/// Degrees used for normalization: out-degree, plus one when the model
/// adds a self-loop to every vertex.
pub fn effective_degrees(g: &CsrGraph, self_loops: bool) -> Vec<u64> {
    let bump = u64::from(self_loops);
    (0..g.num_vertices())
        .map(|v| g.out_degree(v as u32) as u64 + bump)
        .collect()
}

/// Per-edge normalization scales, parallel to the CSR edge array.
#[derive(Clone, Debug, PartialEq)]
pub struct NormCoefficients {
    per_edge: Vec<f32>,
}

impl NormCoefficients {
    pub fn per_edge(&self) -> &[f32] {
        &self.per_edge
    }

    pub fn len(&self) -> usize {
        self.per_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_edge.is_empty()
    }

    pub(crate) fn from_vec(per_edge: Vec<f32>) -> Self {
        NormCoefficients { per_edge }
    }
}

/// Builds per-edge coefficients for `mode` over `g`.
///
/// `global_degrees` supplies the degrees to normalize by; pass the degrees
/// of the enclosing graph when `g` is an extracted subgraph so the scales
/// match the full-graph values. `None` uses the out-degrees of `g` itself.
pub fn build_norm_coefficients(
    g: &CsrGraph,
    mode: Aggregation,
    global_degrees: Option<&[u64]>,
) -> Result<NormCoefficients> {
    let own_degrees;
    let degrees: &[u64] = match global_degrees {
        Some(d) => {
            if d.len() < g.num_vertices() {
                return Err(Error::shape(format!(
                    "degree table holds {} entries for a graph with {} vertices",
                    d.len(),
                    g.num_vertices()
                )));
            }
            d
        }
        None => {
            own_degrees = effective_degrees(g, false);
            &own_degrees
        }
    };
    let mut per_edge = vec![0.0f32; g.num_edges()];
    let offsets = g.row_offsets();
    let cols = g.col_indices();
    for v in 0..g.num_vertices() {
        let dv = degrees[v];
        for e in offsets[v]..offsets[v + 1] {
            per_edge[e] = edge_coeff(mode, dv, degrees[cols[e] as usize]);
        }
    }
    Ok(NormCoefficients::from_vec(per_edge))
}

/// One dense layer: row-major `in_dim x out_dim` weights plus an optional
/// bias of length `out_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights {
    in_dim: usize,
    out_dim: usize,
    weight: Vec<f32>,
    bias: Option<Vec<f32>>,
}

impl LayerWeights {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weight: Vec<f32>,
        bias: Option<Vec<f32>>,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::config("layer dimensions must be at least 1"));
        }
        if weight.len() != in_dim * out_dim {
            return Err(Error::shape(format!(
                "weight buffer holds {} entries, expected {}",
                weight.len(),
                in_dim * out_dim
            )));
        }
        if let Some(b) = &bias {
            if b.len() != out_dim {
                return Err(Error::shape(format!(
                    "bias holds {} entries, expected {out_dim}",
                    b.len()
                )));
            }
        }
        if !weight.iter().all(|w| w.is_finite())
            || bias.iter().flatten().any(|b| !b.is_finite())
        {
            return Err(Error::config("layer parameters must be finite"));
        }
        Ok(LayerWeights {
            in_dim,
            out_dim,
            weight,
            bias,
        })
    }

    /// Square identity layer; useful for pass-through pipelines.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut weight = vec![0.0f32; dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = 1.0;
        }
        LayerWeights::new(dim, dim, weight, None)
    }

    fn seeded(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        // Uniform in [-1/sqrt(in), 1/sqrt(in)] keeps activation magnitudes
        // roughly constant through the stack.
        let limit = 1.0 / (in_dim as f32).sqrt();
        let weight = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        LayerWeights::new(in_dim, out_dim, weight, None)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weight(&self) -> &[f32] {
        &self.weight
    }

    pub fn bias(&self) -> Option<&[f32]> {
        self.bias.as_deref()
    }
}

/// A GCN stack: layer weights plus the aggregation rule and the
/// model-level self-loop flag. Self-loops are applied at aggregation
/// time; the graph structure is never mutated.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel {
    layers: Vec<LayerWeights>,
    self_loops: bool,
    aggregation: Aggregation,
}

impl GcnModel {
    pub fn new(layers: Vec<LayerWeights>, self_loops: bool, aggregation: Aggregation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("a model needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::shape(format!(
                    "layer output dimension {} does not feed the next layer's input {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        Ok(GcnModel {
            layers,
            self_loops,
            aggregation,
        })
    }

    /// Deterministically initialized model with the given dimension chain
    /// `[d_in, h_1, ..., d_out]`, without biases.
    pub fn seeded(
        dims: &[usize],
        self_loops: bool,
        aggregation: Aggregation,
        seed: u64,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config(
                "a dimension chain needs at least an input and an output entry",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| LayerWeights::seeded(w[0], w[1], &mut rng))
            .collect::<Result<Vec<_>>>()?;
        GcnModel::new(layers, self_loops, aggregation)
    }

    pub fn layers(&self) -> &[LayerWeights] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    /// `[d_in, h_1, ..., d_out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.layers[0].in_dim);
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    /// Rejects shapes that cannot be run: a feature-dimension mismatch, or
    /// intermediate activations whose allocation would overflow. Checked
    /// arithmetic means web-scale shapes are analyzable without being
    /// allocatable.
    pub fn check_workload(&self, num_vertices: u64, feature_dim: usize) -> Result<()> {
        if feature_dim != self.input_dim() {
            return Err(Error::shape(format!(
                "features have dimension {feature_dim} but the model expects {}",
                self.input_dim()
            )));
        }
        for dim in self.dims() {
            let bytes = num_vertices as u128 * dim as u128 * 4;
            if bytes > isize::MAX as u128 {
                return Err(Error::capacity(format!(
                    "activation of {num_vertices} x {dim} f32 values cannot be allocated"
                )));
            }
        }
        Ok(())
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        w.write_u32::<LE>(MODEL_VERSION)?;
        w.write_u8(u8::from(self.self_loops))?;
        w.write_u8(match self.aggregation {
            Aggregation::Sum => 0,
            Aggregation::Mean => 1,
            Aggregation::SymNorm => 2,
        })?;
        w.write_u32::<LE>(self.layers.len() as u32)?;
        for layer in &self.layers {
            w.write_u64::<LE>(layer.in_dim as u64)?;
            w.write_u64::<LE>(layer.out_dim as u64)?;
            w.write_u8(u8::from(layer.bias.is_some()))?;
            for &x in &layer.weight {
                w.write_f32::<LE>(x)?;
            }
            if let Some(b) = &layer.bias {
                for &x in b {
                    w.write_f32::<LE>(x)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        if let Err(e) = r.read_exact(&mut magic) {
            return Err(if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::format("file too short for model header")
            } else {
                e.into()
            });
        }
        if &magic != MODEL_MAGIC {
            return Err(Error::format("bad model magic"));
        }
        let version = r.read_u32::<LE>()?;
        if version != MODEL_VERSION {
            return Err(Error::format(format!(
                "unsupported model container version {version}"
            )));
        }
        let self_loops = r.read_u8()? != 0;
        let aggregation = match r.read_u8()? {
            0 => Aggregation::Sum,
            1 => Aggregation::Mean,
            2 => Aggregation::SymNorm,
            other => {
                return Err(Error::format(format!("unknown aggregation tag {other}")))
            }
        };
        let n_layers = r.read_u32::<LE>()? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_dim = r.read_u64::<LE>()? as usize;
            let out_dim = r.read_u64::<LE>()? as usize;
            let has_bias = r.read_u8()? != 0;
            let mut weight = Vec::with_capacity(in_dim * out_dim);
            for _ in 0..in_dim * out_dim {
                weight.push(r.read_f32::<LE>()?);
            }
            let bias = if has_bias {
                let mut b = Vec::with_capacity(out_dim);
                for _ in 0..out_dim {
                    b.push(r.read_f32::<LE>()?);
                }
                Some(b)
            } else {
                None
            };
            layers.push(
                LayerWeights::new(in_dim, out_dim, weight, bias)
                    .map_err(|e| Error::format(format!("inconsistent layer in model file: {e}")))?,
            );
        }
        GcnModel::new(layers, self_loops, aggregation)
            .map_err(|e| Error::format(format!("inconsistent model file: {e}")))
    }
}

/// `dst += c * src`, the single accumulation primitive every aggregation
/// path goes through.
#[inline(always)]
fn axpy(dst: &mut [f32], c: f32, src: &[f32]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Which output rows a row-wise kernel computes.
#[derive(Clone, Copy)]
pub(crate) enum RowSet<'a> {
    All,
    /// Strictly increasing row indices into the output matrix.
    Subset(&'a [u32]),
}

impl RowSet<'_> {
    fn count(&self, all: usize) -> usize {
        match self {
            RowSet::All => all,
            RowSet::Subset(rows) => rows.len(),
        }
    }
}

/// Sequential cutoff: below this much work per call, thread fan-out costs
/// more than it saves.
#[cfg(feature = "parallel")]
const PAR_MIN_WORK: usize = 1 << 14;

/// Aggregates neighborhoods of the selected rows of `g` into `out`.
///
/// For a selected row `v`: `out[v] = sum_e coeffs[e] * x[col(e)]` over the
/// edges of `v` in CSR order, then `+ self_scales[v] * x[v]` when
/// self-scales are present. Rows outside the selection are left untouched.
/// `out` must be pre-zeroed for the selected rows.
pub(crate) fn aggregate_rows_into(
    g: &CsrGraph,
    x: &FeatureMatrix,
    coeffs: Option<&[f32]>,
    self_scales: Option<&[f32]>,
    rows: RowSet<'_>,
    out: &mut FeatureMatrix,
) {
    debug_assert_eq!(x.num_rows(), g.num_vertices());
    debug_assert_eq!(out.num_rows(), g.num_vertices());
    debug_assert_eq!(out.dim(), x.dim());
    let dim = x.dim();

    let row_kernel = |v: usize, dst: &mut [f32]| {
        let offsets = g.row_offsets();
        let cols = g.col_indices();
        for e in offsets[v]..offsets[v + 1] {
            let c = coeffs.map_or(1.0, |cf| cf[e]);
            axpy(dst, c, x.row(cols[e] as usize));
        }
        if let Some(scales) = self_scales {
            axpy(dst, scales[v], x.row(v));
        }
    };

    #[cfg(feature = "parallel")]
    {
        let work = rows.count(g.num_vertices()) * dim.max(1);
        if work >= PAR_MIN_WORK {
            use rayon::prelude::*;
            match rows {
                RowSet::All => {
                    out.values_mut()
                        .par_chunks_mut(dim)
                        .enumerate()
                        .for_each(|(v, dst)| row_kernel(v, dst));
                }
                RowSet::Subset(selected) => {
                    // Selected rows are strictly increasing, so the row
                    // slices are disjoint and may be written concurrently.
                    let ptr = SendPtr(out.values_mut().as_mut_ptr());
                    selected.par_iter().for_each(|&v| {
                        let dst = unsafe {
                            std::slice::from_raw_parts_mut(ptr.get().add(v as usize * dim), dim)
                        };
                        row_kernel(v as usize, dst);
                    });
                }
            }
            return;
        }
    }

    match rows {
        RowSet::All => {
            for v in 0..g.num_vertices() {
                row_kernel(v, out.row_mut(v));
            }
        }
        RowSet::Subset(selected) => {
            for &v in selected {
                row_kernel(v as usize, out.row_mut(v as usize));
            }
        }
    }
}

#[cfg(feature = "parallel")]
#[derive(Clone, Copy)]
struct SendPtr(*mut f32);

#[cfg(feature = "parallel")]
unsafe impl Send for SendPtr {}
#[cfg(feature = "parallel")]
unsafe impl Sync for SendPtr {}

#[cfg(feature = "parallel")]
impl SendPtr {
    fn get(self) -> *mut f32 {
        self.0
    }
}

/// Sparse-times-dense: `out = A_coeff * x`, where `A_coeff` is the
/// adjacency of `g` with optional per-edge coefficients. Pure edge
/// aggregation; self-loops enter only through a model's pipeline.
pub fn spmm(g: &CsrGraph, x: &FeatureMatrix, coeffs: Option<&NormCoefficients>) -> Result<FeatureMatrix> {
    if x.num_rows() != g.num_vertices() {
        return Err(Error::shape(format!(
            "feature matrix has {} rows for a graph with {} vertices",
            x.num_rows(),
            g.num_vertices()
        )));
    }
    if let Some(c) = coeffs {
        if c.len() != g.num_edges() {
            return Err(Error::shape(format!(
                "{} coefficients for a graph with {} edges",
                c.len(),
                g.num_edges()
            )));
        }
    }
    let mut out = FeatureMatrix::zeros(g.num_vertices(), x.dim())?;
    aggregate_rows_into(
        g,
        x,
        coeffs.map(|c| c.per_edge()),
        None,
        RowSet::All,
        &mut out,
    );
    Ok(out)
}

/// Computes `out[r] = x[r] * W + bias` for the selected rows.
pub(crate) fn dense_rows_into(
    x: &FeatureMatrix,
    layer: &LayerWeights,
    rows: RowSet<'_>,
    out: &mut FeatureMatrix,
) {
    debug_assert_eq!(x.dim(), layer.in_dim);
    debug_assert_eq!(out.dim(), layer.out_dim);
    debug_assert_eq!(out.num_rows(), x.num_rows());
    let (in_dim, out_dim) = (layer.in_dim, layer.out_dim);
    let weight = &layer.weight;

    let row_kernel = |r: usize, dst: &mut [f32]| {
        match &layer.bias {
            Some(b) => dst.copy_from_slice(b),
            None => dst.fill(0.0),
        }
        let src = x.row(r);
        for k in 0..in_dim {
            axpy(dst, src[k], &weight[k * out_dim..(k + 1) * out_dim]);
        }
    };

    #[cfg(feature = "parallel")]
    {
        let work = rows.count(x.num_rows()) * in_dim.max(1) * out_dim.max(1);
        if work >= PAR_MIN_WORK {
            use rayon::prelude::*;
            match rows {
                RowSet::All => {
                    out.values_mut()
                        .par_chunks_mut(out_dim)
                        .enumerate()
                        .for_each(|(r, dst)| row_kernel(r, dst));
                }
                RowSet::Subset(selected) => {
                    let ptr = SendPtr(out.values_mut().as_mut_ptr());
                    selected.par_iter().for_each(|&r| {
                        let dst = unsafe {
                            std::slice::from_raw_parts_mut(
                                ptr.get().add(r as usize * out_dim),
                                out_dim,
                            )
                        };
                        row_kernel(r as usize, dst);
                    });
                }
            }
            return;
        }
    }

    match rows {
        RowSet::All => {
            for r in 0..x.num_rows() {
                row_kernel(r, out.row_mut(r));
            }
        }
        RowSet::Subset(selected) => {
            for &r in selected {
                row_kernel(r as usize, out.row_mut(r as usize));
            }
        }
    }
}

/// Dense layer application: `x * W + bias`.
pub fn dense_mm(x: &FeatureMatrix, layer: &LayerWeights) -> Result<FeatureMatrix> {
    if x.dim() != layer.in_dim {
        return Err(Error::shape(format!(
            "features of dimension {} cannot feed a {}-input layer",
            x.dim(),
            layer.in_dim
        )));
    }
    let mut out = FeatureMatrix::zeros(x.num_rows(), layer.out_dim)?;
    dense_rows_into(x, layer, RowSet::All, &mut out);
    Ok(out)
}

/// Element-wise `max(0, x)` into a fresh matrix.
pub fn relu(x: &FeatureMatrix) -> FeatureMatrix {
    let mut out = x.clone();
    relu_rows_in_place(&mut out, RowSet::All);
    out
}

pub(crate) fn relu_rows_in_place(x: &mut FeatureMatrix, rows: RowSet<'_>) {
    let dim = x.dim();
    match rows {
        RowSet::All => {
            for v in x.values_mut() {
                *v = v.max(0.0);
            }
        }
        RowSet::Subset(selected) => {
            for &r in selected {
                for v in &mut x.values_mut()[r as usize * dim..(r as usize + 1) * dim] {
                    *v = v.max(0.0);
                }
            }
        }
    }
}

fn rows_all_finite(x: &FeatureMatrix, rows: RowSet<'_>) -> bool {
    match rows {
        RowSet::All => x.all_finite(),
        RowSet::Subset(selected) => selected
            .iter()
            .all(|&r| x.row(r as usize).iter().all(|v| v.is_finite())),
    }
}

pub(crate) fn check_rows_finite(x: &FeatureMatrix, rows: RowSet<'_>, layer: usize) -> Result<()> {
    if rows_all_finite(x, rows) {
        Ok(())
    } else {
        Err(Error::Numeric { layer })
    }
}

/// Runs the whole model over the whole graph: per layer, neighborhood
/// aggregation, dense update, and ReLU between layers (never after the
/// last). Returns the final `V x d_out` activations.
pub fn full_graph_inference(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
) -> Result<FeatureMatrix> {
    full_graph_inference_clocked(g, x, model, &mut KernelClock::disabled())
}

/// As [`full_graph_inference`], attributing kernel time to `clock`.
/// Coefficient construction, activations, and finiteness checks are left
/// to the unattributed remainder.
pub fn full_graph_inference_clocked(
    g: &CsrGraph,
    x: &FeatureMatrix,
    model: &GcnModel,
    clock: &mut KernelClock,
) -> Result<FeatureMatrix> {
    if x.num_rows() != g.num_vertices() {
        return Err(Error::shape(format!(
            "feature matrix has {} rows for a graph with {} vertices",
            x.num_rows(),
            g.num_vertices()
        )));
    }
    model.check_workload(g.num_vertices() as u64, x.dim())?;

    let degrees = effective_degrees(g, model.self_loops());
    let coeffs = match model.aggregation() {
        Aggregation::Sum => None,
        mode => Some(build_norm_coefficients(g, mode, Some(&degrees))?),
    };
    let self_scales: Option<Vec<f32>> = model.self_loops().then(|| {
        degrees
            .iter()
            .map(|&d| self_coeff(model.aggregation(), d))
            .collect()
    });

    let mut owned: Option<FeatureMatrix> = None;
    for (idx, layer) in model.layers().iter().enumerate() {
        let input = owned.as_ref().unwrap_or(x);
        let mut agg = FeatureMatrix::zeros(g.num_vertices(), input.dim())?;
        clock.time(KernelCategory::Spmm, || {
            aggregate_rows_into(
                g,
                input,
                coeffs.as_ref().map(|c| c.per_edge()),
                self_scales.as_deref(),
                RowSet::All,
                &mut agg,
            )
        });
        let mut z = FeatureMatrix::zeros(g.num_vertices(), layer.out_dim())?;
        clock.time(KernelCategory::DenseMm, || {
            dense_rows_into(&agg, layer, RowSet::All, &mut z)
        });
        if idx + 1 < model.num_layers() {
            relu_rows_in_place(&mut z, RowSet::All);
        }
        check_rows_finite(&z, RowSet::All, idx)?;
        owned = Some(z);
    }
    Ok(owned.unwrap())
}
