//! `GPRJ` projector checkpoints.
//!
//! ```text
//! "GPRJ" | u8 version | u32 d_in | u32 d_h | u32 d_out
//!        | payload: w1 (d_in*d_h) | b1 (d_h) | w2 (d_h*d_out) | b2 (d_out)   f64 LE, row-major
//!        | version 2 only: u64 adam_t | u64 epochs_done | f64 lr, beta1, beta2, eps
//!        |                 | m for w1,b1,w2,b2 | v for w1,b1,w2,b2
//!        | u32 crc32(payload)
//! ```
//!
//! Version 1 holds parameters only. Version 2 adds the optimizer state so a
//! run can be resumed exactly.

use ndarray::{Array1, Array2};

use super::{AdamConfig, AdamState, GroundedProjector};
use crate::binio::{FrameError, FrameReader, FrameWriter};

const MAGIC: &[u8; 4] = b"GPRJ";

/// Optimizer state carried by a resumable checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSnapshot {
    pub adam: AdamState,
    pub epochs_done: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub projector: GroundedProjector,
    pub optimizer: Option<OptimizerSnapshot>,
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let p = &ckpt.projector;
    let mut w = FrameWriter::new(MAGIC);
    w.u8(if ckpt.optimizer.is_some() { 2 } else { 1 })
        .u32(p.d_in() as u32)
        .u32(p.d_hidden() as u32)
        .u32(p.d_out() as u32)
        .begin_payload();
    for t in p.tensors() {
        w.f64s(t.iter().copied());
    }
    if let Some(opt) = &ckpt.optimizer {
        let c = opt.adam.config;
        w.u64(opt.adam.t)
            .u64(opt.epochs_done)
            .f64s([c.lr, c.beta1, c.beta2, c.eps]);
        let sizes: Vec<usize> = p.tensors().iter().map(|t| t.len()).collect();
        for buffers in [&opt.adam.m, &opt.adam.v] {
            if buffers.is_empty() {
                for &n in &sizes {
                    w.f64s(std::iter::repeat_n(0.0, n));
                }
            } else {
                for b in buffers.iter() {
                    w.f64s(b.iter().copied());
                }
            }
        }
    }
    w.finish()
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint, FrameError> {
    let mut r = FrameReader::new(bytes, MAGIC)?;
    let version = r.u8()?;
    if !(1..=2).contains(&version) {
        return Err(FrameError::Invalid {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let d_in = r.u32()? as usize;
    let d_h = r.u32()? as usize;
    let d_out = r.u32()? as usize;
    let start = r.offset();
    let shapes = [d_in * d_h, d_h, d_h * d_out, d_out];
    let mut tensors: Vec<Vec<f64>> = Vec::with_capacity(4);
    for &n in &shapes {
        tensors.push(r.f64s(n)?);
    }
    let optimizer = if version == 2 {
        let t = r.u64()?;
        let epochs_done = r.u64()?;
        let cfg = r.f64s(4)?;
        let mut m = Vec::with_capacity(4);
        for &n in &shapes {
            m.push(r.f64s(n)?);
        }
        let mut v = Vec::with_capacity(4);
        for &n in &shapes {
            v.push(r.f64s(n)?);
        }
        Some(OptimizerSnapshot {
            adam: AdamState {
                config: AdamConfig {
                    lr: cfg[0],
                    beta1: cfg[1],
                    beta2: cfg[2],
                    eps: cfg[3],
                },
                t,
                m,
                v,
            },
            epochs_done,
        })
    } else {
        None
    };
    r.verify_crc(start)?;
    if r.remaining() != 0 {
        return Err(FrameError::Invalid {
            offset: r.offset(),
            reason: format!("{} trailing bytes", r.remaining()),
        });
    }
    let mut it = tensors.into_iter();
    let w1 = Array2::from_shape_vec((d_in, d_h), it.next().unwrap()).expect("sized above");
    let b1 = Array1::from_vec(it.next().unwrap());
    let w2 = Array2::from_shape_vec((d_h, d_out), it.next().unwrap()).expect("sized above");
    let b2 = Array1::from_vec(it.next().unwrap());
    Ok(Checkpoint {
        projector: GroundedProjector { w1, b1, w2, b2 },
        optimizer,
    })
}
