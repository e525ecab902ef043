//! Flat little-endian parameter serialization with a versioned shape manifest.
//!
//! Layout: magic "OFP1", u32 version, u32 tensor count, then per tensor a u32
//! rank, u32 dimensions, and the row-major f64 payload. All integers and
//! floats are little-endian.

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

const MAGIC: &[u8; 4] = b"OFP1";
const VERSION: u32 = 1;

pub fn serialize_tensors(tensors: &[Tensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn deserialize_tensors(bytes: &[u8]) -> Result<Vec<Tensor>> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let magic = cursor.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadData("bad magic".into()));
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(Error::BadData(format!("unsupported version {version}")));
    }
    let count = cursor.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = cursor.u32()? as usize;
        if rank > 8 {
            return Err(Error::BadData("implausible tensor rank".into()));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cursor.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(cursor.f64()?);
        }
        tensors.push(Tensor::new(shape, data)?);
    }
    if cursor.pos != bytes.len() {
        return Err(Error::BadData("trailing bytes".into()));
    }
    Ok(tensors)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::BadData("truncated data".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
