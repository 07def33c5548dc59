//! Dense row-major feature matrices and their binary container.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const FEATURE_MAGIC: &[u8; 4] = b"GFTR";
const FEATURE_VERSION: u32 = 1;

/// Row-major `num_rows x dim` matrix of `f32` values.
///
/// `dim >= 1` always holds; `values.len() == num_rows * dim`. Kernel
/// outputs are checked for finiteness at the pipeline level rather than on
/// every construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    num_rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn zeros(num_rows: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("feature dimension must be at least 1"));
        }
        let len = num_rows
            .checked_mul(dim)
            .ok_or_else(|| Error::capacity("feature matrix size overflows the address space"))?;
        Ok(FeatureMatrix {
            num_rows,
            dim,
            values: vec![0.0; len],
        })
    }

    pub fn from_values(num_rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("feature dimension must be at least 1"));
        }
        if values.len() != num_rows * dim {
            return Err(Error::shape(format!(
                "value buffer holds {} entries, expected {} ({} rows x {} dims)",
                values.len(),
                num_rows * dim,
                num_rows,
                dim
            )));
        }
        Ok(FeatureMatrix {
            num_rows,
            dim,
            values,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    /// Copies the given rows into a new matrix, preserving order.
    pub fn gather_rows(&self, rows: &[u32]) -> Result<FeatureMatrix> {
        let mut out = FeatureMatrix::zeros(rows.len(), self.dim)?;
        for (local, &r) in rows.iter().enumerate() {
            if r as usize >= self.num_rows {
                return Err(Error::Bounds {
                    vertex: r as u64,
                    limit: self.num_rows as u64,
                });
            }
            out.row_mut(local).copy_from_slice(self.row(r as usize));
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(FEATURE_MAGIC)?;
        w.write_u32::<LE>(FEATURE_VERSION)?;
        w.write_u64::<LE>(self.num_rows as u64)?;
        w.write_u64::<LE>(self.dim as u64)?;
        for &v in &self.values {
            w.write_f32::<LE>(v)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        if let Err(e) = r.read_exact(&mut magic) {
            return Err(if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::format("file too short for feature header")
            } else {
                e.into()
            });
        }
        if &magic != FEATURE_MAGIC {
            return Err(Error::format("bad feature magic"));
        }
        let version = r.read_u32::<LE>()?;
        if version != FEATURE_VERSION {
            return Err(Error::format(format!(
                "unsupported feature container version {version}"
            )));
        }
        let num_rows = r.read_u64::<LE>()? as usize;
        let dim = r.read_u64::<LE>()? as usize;
        if dim == 0 {
            return Err(Error::format("feature container declares dimension 0"));
        }
        let len = num_rows
            .checked_mul(dim)
            .ok_or_else(|| Error::format("feature container size overflows"))?;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            let v = r.read_f32::<LE>()?;
            if !v.is_finite() {
                return Err(Error::format("feature container holds non-finite values"));
            }
            values.push(v);
        }
        FeatureMatrix::from_values(num_rows, dim, values)
    }
}

/// Deterministically generates a feature matrix with entries uniform in
/// `[-1, 1]`. The same `(num_rows, dim, seed)` triple always yields the
/// same matrix, on every platform.
pub fn gen_features(num_rows: usize, dim: usize, seed: u64) -> Result<FeatureMatrix> {
    if dim == 0 {
        return Err(Error::config("feature dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FeatureMatrix::zeros(num_rows, dim)?;
    for v in out.values_mut() {
        *v = rng.random_range(-1.0f32..=1.0);
    }
    Ok(out)
}
