//! IDX files, optionally gzip-compressed.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    /// `N x (rows*cols)` pixels scaled to `[0, 1]`.
    Images {
        pixels: Tensor,
        rows: usize,
        cols: usize,
    },
    Labels(Vec<u8>),
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingData(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| {
                Error::format(
                    "IDX file",
                    format!("{}: bad gzip stream: {e}", path.display()),
                )
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format("IDX file", "truncated header"))
}

fn decode(bytes: &[u8]) -> Result<IdxData> {
    let magic = be_u32(bytes, 0)?;
    match magic {
        IMAGES_MAGIC => {
            let n = be_u32(bytes, 4)? as usize;
            let rows = be_u32(bytes, 8)? as usize;
            let cols = be_u32(bytes, 12)? as usize;
            let need = n * rows * cols;
            let body = &bytes[16..];
            if body.len() < need {
                return Err(Error::format(
                    "IDX file",
                    format!("truncated: need {need} pixels, have {}", body.len()),
                ));
            }
            if body.len() > need {
                return Err(Error::format(
                    "IDX file",
                    format!(
                        "dimension mismatch: header declares {need} pixels, file holds {}",
                        body.len()
                    ),
                ));
            }
            if n == 0 || rows == 0 || cols == 0 {
                return Err(Error::format("IDX file", "zero dimension"));
            }
            let data = body.iter().map(|&p| f64::from(p) / 255.0).collect();
            Ok(IdxData::Images {
                pixels: Tensor::from_parts(vec![n, rows * cols], data),
                rows,
                cols,
            })
        }
        LABELS_MAGIC => {
            let n = be_u32(bytes, 4)? as usize;
            let body = &bytes[8..];
            if body.len() != n {
                return Err(Error::format(
                    "IDX file",
                    format!("header declares {n} labels, file holds {}", body.len()),
                ));
            }
            Ok(IdxData::Labels(body.to_vec()))
        }
        other => Err(Error::format(
            "IDX file",
            format!("bad magic 0x{other:08x}"),
        )),
    }
}

pub fn load_idx(path: &Path) -> Result<IdxData> {
    decode(&read_bytes(path)?).map_err(|e| match e {
        Error::Format { what, detail } => Error::Format {
            what,
            detail: format!("{}: {detail}", path.display()),
        },
        other => other,
    })
}

pub fn load_idx_images(path: &Path) -> Result<Tensor> {
    match load_idx(path)? {
        IdxData::Images { pixels, .. } => Ok(pixels),
        IdxData::Labels(_) => Err(Error::format(
            "IDX file",
            format!("{} holds labels, not images", path.display()),
        )),
    }
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    match load_idx(path)? {
        IdxData::Labels(l) => Ok(l),
        IdxData::Images { .. } => Err(Error::format(
            "IDX file",
            format!("{} holds images, not labels", path.display()),
        )),
    }
}

fn write_maybe_gz(path: &Path, bytes: Vec<u8>) -> Result<()> {
    let out = if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?
    } else {
        bytes
    };
    crate::fsutil::write_atomic(path, &out)
}

/// Writes raw 8-bit pixels; gzip when the path ends in `.gz`.
pub fn write_idx_images(
    path: &Path,
    pixels: &[u8],
    n: usize,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if pixels.len() != n * rows * cols {
        return Err(Error::Shape(format!(
            "{} pixels for {n} images of {rows}x{cols}",
            pixels.len()
        )));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    write_maybe_gz(path, out)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    write_maybe_gz(path, out)
}

fn find(dir: &Path, stem: &str) -> Option<PathBuf> {
    [stem.to_string(), format!("{stem}.gz")]
        .into_iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
}

/// Loads every MNIST split present in `dir` (train and/or t10k), concatenated.
pub fn load_mnist_dir(dir: &Path) -> Result<(Tensor, Vec<u8>)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for prefix in ["train", "t10k"] {
        let img = find(dir, &format!("{prefix}-images-idx3-ubyte"));
        let lab = find(dir, &format!("{prefix}-labels-idx1-ubyte"));
        match (img, lab) {
            (Some(i), Some(l)) => {
                let x = load_idx_images(&i)?;
                let y = load_idx_labels(&l)?;
                if x.rows() != y.len() {
                    return Err(Error::format(
                        "IDX file",
                        format!(
                            "{} images but {} labels in {}",
                            x.rows(),
                            y.len(),
                            dir.display()
                        ),
                    ));
                }
                images.push(x);
                labels.extend(y);
            }
            (None, None) => {}
            (Some(_), None) | (None, Some(_)) => {
                return Err(Error::MissingData(
                    dir.join(format!("{prefix}-*-idx?-ubyte")),
                ));
            }
        }
    }
    if images.is_empty() {
        return Err(Error::MissingData(dir.join("train-images-idx3-ubyte")));
    }
    let all = Tensor::vstack(&images.iter().collect::<Vec<_>>())?;
    if let Some(&bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::format(
            "IDX file",
            format!("label {bad} outside 0-9"),
        ));
    }
    Ok((all, labels))
}
