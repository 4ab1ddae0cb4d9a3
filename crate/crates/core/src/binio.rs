//! Little-endian framing shared by the binary file formats.
//!
//! All formats are `magic | header fields | payload | crc32(payload)`. The
//! reader tracks the absolute byte offset so errors can point at the exact
//! location of a problem.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated input at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("checksum mismatch at byte {offset}: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { offset: usize, stored: u32, computed: u32 },
    #[error("invalid field at byte {offset}: {reason}")]
    Invalid { offset: usize, reason: String },
}

/// Appends header fields and a checksummed payload to a byte buffer.
pub struct FrameWriter {
    buf: Vec<u8>,
    payload_start: Option<usize>,
}

impl FrameWriter {
    pub fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(magic);
        Self {
            buf,
            payload_start: None,
        }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    /// Marks the start of the checksummed payload.
    pub fn begin_payload(&mut self) -> &mut Self {
        self.payload_start = Some(self.buf.len());
        self
    }

    pub fn f32s(&mut self, values: impl IntoIterator<Item = f32>) -> &mut Self {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self
    }

    pub fn f64s(&mut self, values: impl IntoIterator<Item = f64>) -> &mut Self {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self
    }

    pub fn finish(mut self) -> Vec<u8> {
        let start = self.payload_start.unwrap_or(self.buf.len());
        let crc = crc32fast::hash(&self.buf[start..]);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

/// Cursor over a framed byte buffer.
pub struct FrameReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> FrameReader<'a> {
    pub fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self, FrameError> {
        if bytes.len() < 4 {
            return Err(FrameError::Truncated {
                offset: bytes.len(),
                needed: 4 - bytes.len(),
            });
        }
        if &bytes[..4] != magic {
            return Err(FrameError::BadMagic {
                expected: String::from_utf8_lossy(magic).into_owned(),
                found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
            });
        }
        Ok(Self { bytes, pos: 4 })
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        if self.remaining() < n {
            return Err(FrameError::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32, FrameError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FrameError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FrameError> {
        (0..n).map(|_| self.f64()).collect()
    }

    /// Verifies the trailing CRC32 of `bytes[payload_start..current]` and
    /// requires that nothing follows it.
    pub fn verify_crc(&mut self, payload_start: usize) -> Result<(), FrameError> {
        let payload_end = self.pos;
        let stored = self.u32()?;
        let computed = crc32fast::hash(&self.bytes[payload_start..payload_end]);
        if stored != computed {
            return Err(FrameError::Checksum {
                offset: payload_end,
                stored,
                computed,
            });
        }
        Ok(())
    }
}
