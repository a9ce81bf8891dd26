//! Binary tensor (`TNS1`) and mask (`MSK1`) files.
//!
//! Both start with a 4-byte magic and three little-endian `u64` dims. A tensor
//! payload is `n1*n2*n3` little-endian `f64` values, a mask payload one byte
//! (0 or 1) per entry, both in first-index-fastest order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tensor::{Dims, ObservationMask, Tensor3};

pub const TENSOR_MAGIC: &[u8; 4] = b"TNS1";
pub const MASK_MAGIC: &[u8; 4] = b"MSK1";

const HEADER_LEN: usize = 4 + 3 * 8;

/// Encoded size in bytes of a tensor with these dims.
pub fn tensor_file_len(dims: Dims) -> usize {
    HEADER_LEN + 8 * dims.len()
}

pub fn mask_file_len(dims: Dims) -> usize {
    HEADER_LEN + dims.len()
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], dims: Dims) -> Result<()> {
    w.write_all(magic)?;
    for n in dims.0 {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<Dims> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated header".into()),
        _ => Error::Io(e),
    })?;
    if &head[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&head[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut dims = [0usize; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let raw = u64::from_le_bytes(head[4 + 8 * i..12 + 8 * i].try_into().unwrap());
        *d = usize::try_from(raw).map_err(|_| Error::Format(format!("dimension {raw} too large")))?;
    }
    Dims::new(dims[0], dims[1], dims[2]).map_err(|e| Error::Format(e.to_string()))
}

fn read_payload<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {len}",
            buf.len()
        )));
    }
    Ok(buf)
}

pub fn write_tensor<W: Write>(w: &mut W, x: &Tensor3) -> Result<()> {
    write_header(w, TENSOR_MAGIC, x.dims())?;
    let mut buf = Vec::with_capacity(8 * x.len());
    for v in x.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor3> {
    let dims = read_header(r, TENSOR_MAGIC)?;
    let bytes = read_payload(r, 8 * dims.len())?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::from_vec(dims, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_mask<W: Write>(w: &mut W, mask: &ObservationMask) -> Result<()> {
    write_header(w, MASK_MAGIC, mask.dims())?;
    let buf: Vec<u8> = mask.as_slice().iter().map(|&f| f as u8).collect();
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_mask<R: Read>(r: &mut R) -> Result<ObservationMask> {
    let dims = read_header(r, MASK_MAGIC)?;
    let bytes = read_payload(r, dims.len())?;
    let flags = bytes
        .iter()
        .enumerate()
        .map(|(o, &b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format(format!("mask byte {other} at offset {o}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationMask::from_vec(dims, flags)
}
