//! Versioned binary parameter checkpoints.
//!
//! Layout: magic `HARCKPT1`, u32 version, 32-byte config digest, u32 tensor
//! count, then per tensor: u16 name length, name bytes, u8 rank, u64 dims,
//! row-major f64 little-endian data.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"HARCKPT1";
const VERSION: u32 = 1;

pub fn save(
    path: &Path,
    names: &[String],
    tensors: &[Tensor],
    config_digest: &[u8; 32],
) -> Result<()> {
    assert_eq!(names.len(), tensors.len(), "checkpoint name/tensor mismatch");
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(config_digest).map_err(io)?;
    w.write_all(&(tensors.len() as u32).to_le_bytes()).map_err(io)?;
    for (name, t) in names.iter().zip(tensors) {
        let nb = name.as_bytes();
        w.write_all(&(nb.len() as u16).to_le_bytes()).map_err(io)?;
        w.write_all(nb).map_err(io)?;
        w.write_all(&[t.shape().len() as u8]).map_err(io)?;
        for d in t.shape() {
            w.write_all(&(*d as u64).to_le_bytes()).map_err(io)?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load(path: &Path) -> Result<(Vec<String>, Vec<Tensor>, [u8; 32])> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |why: &str| Error::BadFormat {
        path: path.to_path_buf(),
        why: why.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
    let version = u32::from_le_bytes(u32b);
    if version != VERSION {
        return Err(bad(&format!("unsupported checkpoint version {version}")));
    }
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest).map_err(|e| Error::io(path, e))?;
    r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
    let count = u32::from_le_bytes(u32b) as usize;
    let mut names = Vec::with_capacity(count);
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let mut u16b = [0u8; 2];
        r.read_exact(&mut u16b).map_err(|e| Error::io(path, e))?;
        let nlen = u16::from_le_bytes(u16b) as usize;
        let mut nb = vec![0u8; nlen];
        r.read_exact(&mut nb).map_err(|e| Error::io(path, e))?;
        let name = String::from_utf8(nb).map_err(|_| bad("tensor name is not utf-8"))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank).map_err(|e| Error::io(path, e))?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        let mut u64b = [0u8; 8];
        for _ in 0..rank[0] {
            r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
            shape.push(u64::from_le_bytes(u64b) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
            data.push(f64::from_le_bytes(u64b));
        }
        names.push(name);
        tensors.push(Tensor::new(shape, data).with_grad());
    }
    Ok((names, tensors, digest))
}
