//! Binary cache for preprocessed segments, keyed by corpus and config digests.
//!
//! Layout: magic `HARSEGV1`, u32 version, 32-byte corpus digest, 32-byte
//! config digest, class-name table, u64 segment count, u32 S, u32 C, then
//! per segment: id u64, class u32, user i64, source u64, start u64 and
//! `S·C` row-major f64 little-endian values.

use super::Segment;
use crate::dataset::ActivityLabel;
use crate::error::{Error, Result};
use crate::mat::Mat;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"HARSEGV1";
const VERSION: u32 = 1;

pub fn save_segment_cache(
    path: &Path,
    segments: &[Segment],
    class_names: &[String],
    corpus_digest: &[u8; 32],
    config_digest: &[u8; 32],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(corpus_digest).map_err(io)?;
    w.write_all(config_digest).map_err(io)?;
    w.write_all(&(class_names.len() as u16).to_le_bytes()).map_err(io)?;
    for name in class_names {
        let nb = name.as_bytes();
        w.write_all(&(nb.len() as u16).to_le_bytes()).map_err(io)?;
        w.write_all(nb).map_err(io)?;
    }
    let (s, c) = segments
        .first()
        .map(|seg| (seg.data.rows(), seg.data.cols()))
        .unwrap_or((0, 0));
    w.write_all(&(segments.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(s as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(c as u32).to_le_bytes()).map_err(io)?;
    for seg in segments {
        w.write_all(&seg.id.to_le_bytes()).map_err(io)?;
        w.write_all(&(seg.label.class_index as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&seg.user_id.to_le_bytes()).map_err(io)?;
        w.write_all(&(seg.source_recording as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(seg.start_index as u64).to_le_bytes()).map_err(io)?;
        for v in seg.data.data() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Loads a cache, refusing when the stored key differs from the expected
/// `(corpus digest, config digest)` pair.
pub fn load_segment_cache(
    path: &Path,
    corpus_digest: &[u8; 32],
    config_digest: &[u8; 32],
) -> Result<Vec<Segment>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |why: &str| Error::BadFormat {
        path: path.to_path_buf(),
        why: why.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(bad("not a segment cache (bad magic)"));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
    if u32::from_le_bytes(u32b) != VERSION {
        return Err(bad("unsupported cache version"));
    }
    let mut stored_corpus = [0u8; 32];
    let mut stored_config = [0u8; 32];
    r.read_exact(&mut stored_corpus).map_err(|e| Error::io(path, e))?;
    r.read_exact(&mut stored_config).map_err(|e| Error::io(path, e))?;
    if &stored_corpus != corpus_digest {
        return Err(Error::CacheKey("corpus digest differs".into()));
    }
    if &stored_config != config_digest {
        return Err(Error::CacheKey("preprocess config digest differs".into()));
    }
    let mut u16b = [0u8; 2];
    r.read_exact(&mut u16b).map_err(|e| Error::io(path, e))?;
    let n_classes = u16::from_le_bytes(u16b) as usize;
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        r.read_exact(&mut u16b).map_err(|e| Error::io(path, e))?;
        let len = u16::from_le_bytes(u16b) as usize;
        let mut nb = vec![0u8; len];
        r.read_exact(&mut nb).map_err(|e| Error::io(path, e))?;
        class_names.push(String::from_utf8(nb).map_err(|_| bad("class name not utf-8"))?);
    }
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
    let count = u64::from_le_bytes(u64b) as usize;
    r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
    let s = u32::from_le_bytes(u32b) as usize;
    r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
    let c = u32::from_le_bytes(u32b) as usize;

    let mut segments = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
        let id = u64::from_le_bytes(u64b);
        r.read_exact(&mut u32b).map_err(|e| Error::io(path, e))?;
        let class = u32::from_le_bytes(u32b) as usize;
        r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
        let user = i64::from_le_bytes(u64b);
        r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
        let source = u64::from_le_bytes(u64b) as usize;
        r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
        let start = u64::from_le_bytes(u64b) as usize;
        let mut data = Vec::with_capacity(s * c);
        for _ in 0..s * c {
            r.read_exact(&mut u64b).map_err(|e| Error::io(path, e))?;
            data.push(f64::from_le_bytes(u64b));
        }
        let class_name = class_names
            .get(class)
            .cloned()
            .ok_or_else(|| bad("class index out of range"))?;
        segments.push(Segment {
            id,
            data: Mat::from_vec(s, c, data),
            label: ActivityLabel {
                class_index: class,
                class_name,
            },
            user_id: user,
            source_recording: source,
            start_index: start,
        });
    }
    Ok(segments)
}
