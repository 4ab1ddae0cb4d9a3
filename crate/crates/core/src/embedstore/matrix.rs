use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::binio::{FrameReader, FrameWriter};

const MAGIC: &[u8; 4] = b"GEMB";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 14;

/// Storage precision of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn width(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }

    fn from_width(w: u8) -> Option<Self> {
        match w {
            4 => Some(Precision::F32),
            8 => Some(Precision::F64),
            _ => None,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "4" => Ok(Precision::F32),
            "f64" | "8" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (expected f32 or f64)")),
        }
    }
}

/// Dense row-major `n x d` matrix of embedding rows.
///
/// Values are held as `f64`. With [`Precision::F32`] every value is rounded
/// to the nearest `f32` on construction, so saving and reloading is
/// bit-exact in either precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f64>,
    precision: Precision,
}

impl EmbeddingMatrix {
    pub fn new(mut data: Array2<f64>, precision: Precision) -> Result<Self, StoreError> {
        if data.ncols() == 0 {
            return Err(StoreError::ShapeMismatch("embedding dimension must be positive".into()));
        }
        if precision == Precision::F32 {
            data.mapv_inplace(|v| v as f32 as f64);
        }
        for (row, r) in data.rows().into_iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(StoreError::NonFiniteValue {
                    row,
                    offset: HEADER_LEN + row * data.ncols() * precision.width(),
                });
            }
        }
        if !data.is_standard_layout() {
            data = data.as_standard_layout().into_owned();
        }
        Ok(Self { data, precision })
    }

    pub fn from_rows(n: usize, d: usize, values: Vec<f64>, precision: Precision) -> Result<Self, StoreError> {
        let data =
            Array2::from_shape_vec((n, d), values).map_err(|e| StoreError::ShapeMismatch(format!("{n}x{d}: {e}")))?;
        Self::new(data, precision)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn with_precision(self, precision: Precision) -> Result<Self, StoreError> {
        Self::new(self.data, precision)
    }
}

/// Encodes a matrix in the `GEMB` format.
pub fn write_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut w = FrameWriter::new(MAGIC);
    w.u8(VERSION)
        .u8(m.precision.width() as u8)
        .u32(m.rows() as u32)
        .u32(m.dim() as u32)
        .begin_payload();
    let values = m.data.iter().copied();
    match m.precision {
        Precision::F32 => w.f32s(values.map(|v| v as f32)),
        Precision::F64 => w.f64s(values),
    };
    w.finish()
}

/// Decodes a `GEMB` byte buffer.
pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix, StoreError> {
    let mut r = FrameReader::new(bytes, MAGIC)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(StoreError::MalformedHeader {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let width = r.u8()?;
    let precision = Precision::from_width(width).ok_or_else(|| StoreError::MalformedHeader {
        offset: 5,
        reason: format!("precision byte must be 4 or 8, found {width}"),
    })?;
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(StoreError::MalformedHeader {
            offset: 10,
            reason: "dimension must be positive".into(),
        });
    }
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(precision.width()))
        .ok_or_else(|| StoreError::MalformedHeader {
            offset: 6,
            reason: format!("{n}x{d} overflows"),
        })?;
    let found = r.remaining().saturating_sub(4);
    if r.remaining() < 4 || found != expected {
        return Err(StoreError::ShapeMismatch(format!(
            "header declares {n}x{d} ({expected} payload bytes) but file carries {found} payload bytes"
        )));
    }
    let payload_start = r.offset();
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        values.push(match precision {
            Precision::F32 => r.f32()? as f64,
            Precision::F64 => r.f64()?,
        });
    }
    r.verify_crc(payload_start)?;
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(StoreError::NonFiniteValue {
            row: pos / d,
            offset: payload_start + pos * precision.width(),
        });
    }
    EmbeddingMatrix::from_rows(n, d, values, precision)
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    fs::write(path, write_embeddings(m)).map_err(|e| StoreError::io(path, e))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, StoreError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
    read_embeddings(&bytes)
}
