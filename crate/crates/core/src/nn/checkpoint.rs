//! `WGAD` checkpoints: magic, version byte, named little-endian f32 tensors,
//! trailing CRC32 over everything before it.

use std::fs;
use std::path::Path;

use super::ParamStore;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WGAD";
pub const CHECKPOINT_VERSION: u8 = 1;

pub fn encode_checkpoint<T: Real>(params: &ParamStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    for (name, t) in params.iter() {
        let name = name.as_bytes();
        out.extend_from_slice(&u16::try_from(name.len()).expect("short name").to_le_bytes());
        out.extend_from_slice(name);
        out.push(u8::try_from(t.shape().len()).expect("small rank"));
        for &d in t.shape() {
            out.extend_from_slice(&u32::try_from(d).expect("dim fits u32").to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::format("checkpoint", format!("truncated at byte {}", self.pos))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

/// Decodes a checkpoint. `origin` names the source in checksum errors.
pub fn decode_checkpoint<T: Real>(bytes: &[u8], origin: &Path) -> Result<ParamStore<T>> {
    if bytes.len() < CHECKPOINT_MAGIC.len() + 1 + 4 {
        return Err(Error::format("checkpoint", "file too short"));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum {
            path: origin.to_path_buf(),
            stored,
            computed,
        });
    }
    if body[4] != CHECKPOINT_VERSION {
        return Err(Error::format(
            "checkpoint",
            format!("unsupported version {}", body[4]),
        ));
    }
    let mut r = Reader { buf: body, pos: 5 };
    let mut store = ParamStore::default();
    while r.pos < body.len() {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format("checkpoint", "tensor name is not UTF-8"))?
            .to_string();
        let rank = r.u8()? as usize;
        let shape = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let raw = r.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::format("checkpoint", "tensor too large"))?,
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::from_f64(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
            .collect();
        let t = Tensor::new(shape, data)
            .map_err(|e| Error::format("checkpoint", format!("tensor `{name}`: {e}")))?;
        store.insert(name, t);
    }
    Ok(store)
}

pub fn save_checkpoint<T: Real>(params: &ParamStore<T>, path: &Path) -> Result<()> {
    crate::fsutil::write_atomic(path, &encode_checkpoint(params))
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<ParamStore<T>> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingData(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_checkpoint(&bytes, path)
}
