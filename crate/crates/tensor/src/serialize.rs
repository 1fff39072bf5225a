//! Flat binary parameter container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "TSPK" | version u32
//! per entry: name_len u32 | name (UTF-8) | rank u32 | extents u32[rank] | f64[numel]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"TSPK";
pub const VERSION: u32 = 1;

/// Refuse to allocate containers claiming more elements than this.
const MAX_NUMEL: u64 = 1 << 28;

pub fn save_tensors<P: AsRef<Path>>(path: P, entries: &[(String, Tensor)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, tensor) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        let shape = tensor.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &e in &shape {
            w.write_all(&(e as u32).to_le_bytes())?;
        }
        for v in tensor.to_vec() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_tensors<P: AsRef<Path>>(path: P) -> Result<Vec<(String, Tensor)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(TensorError::Container(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(TensorError::Container(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let mut entries = Vec::new();
    loop {
        let name_len = match read_u32_or_eof(&mut r)? {
            Some(n) => n as usize,
            None => break,
        };
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| TensorError::Container(format!("entry name is not UTF-8: {e}")))?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        let mut numel: u64 = 1;
        for _ in 0..rank {
            let e = read_u32(&mut r)? as usize;
            if e == 0 {
                return Err(TensorError::Container(format!(
                    "entry '{name}' has a zero extent"
                )));
            }
            numel = numel.saturating_mul(e as u64);
            shape.push(e);
        }
        if numel > MAX_NUMEL {
            return Err(TensorError::Container(format!(
                "entry '{name}' claims {numel} elements"
            )));
        }
        let mut data = Vec::with_capacity(numel as usize);
        let mut buf = [0u8; 8];
        for _ in 0..numel {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        entries.push((name, Tensor::from_vec(data, &shape)?));
    }
    Ok(entries)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Reads a u32, mapping a clean end-of-file to None.
fn read_u32_or_eof<R: Read>(r: &mut R) -> Result<Option<u32>> {
    let mut buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(TensorError::Container(
                "truncated entry header at end of file".into(),
            ));
        }
        filled += n;
    }
    Ok(Some(u32::from_le_bytes(buf)))
}
