//! IDX files (big-endian): `0x00000803` images of unsigned bytes, and
//! `0x00000801` labels of unsigned bytes.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            msg: msg.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.fail(self.pos, format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let at = self.pos;
        let magic = self.u32("magic number")?;
        if magic != expected {
            return Err(self.fail(
                at,
                format!("magic number {magic:#010x}, expected {expected:#010x}"),
            ));
        }
        Ok(())
    }

    fn body(&self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(self.fail(
                self.bytes.len(),
                format!("truncated payload: {available} of {len} bytes present"),
            ));
        }
        Ok(&self.bytes[self.pos..self.pos + len])
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Raw image bytes with `(count, rows, cols)`.
pub fn read_idx_images(path: &Path) -> Result<(Vec<u8>, usize, usize, usize)> {
    let bytes = read(path)?;
    let mut cur = Cursor { path, bytes: &bytes, pos: 0 };
    cur.magic(IMAGE_MAGIC)?;
    let count = cur.u32("image count")? as usize;
    let rows = cur.u32("row count")? as usize;
    let cols = cur.u32("column count")? as usize;
    let pixels = cur.body(count * rows * cols)?.to_vec();
    Ok((pixels, count, rows, cols))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read(path)?;
    let mut cur = Cursor { path, bytes: &bytes, pos: 0 };
    cur.magic(LABEL_MAGIC)?;
    let count = cur.u32("label count")? as usize;
    Ok(cur.body(count)?.to_vec())
}

/// Loads an image/label pair. Pixels are scaled to `[0, 1]` and flattened row
/// by row; the class count is one past the largest label.
pub fn load_idx(image_path: &Path, label_path: &Path) -> Result<Dataset> {
    let (pixels, count, rows, cols) = read_idx_images(image_path)?;
    let raw_labels = read_idx_labels(label_path)?;
    if raw_labels.len() != count {
        return Err(Error::Format {
            path: label_path.to_path_buf(),
            offset: 4,
            msg: format!(
                "label count {} does not match image count {count} in {}",
                raw_labels.len(),
                image_path.display()
            ),
        });
    }
    let d = rows * cols;
    let features = Array2::from_shape_vec(
        (count, d),
        pixels.iter().map(|&p| p as f64 / 255.0).collect(),
    )
    .map_err(|e| Error::Shape(e.to_string()))?;
    let labels: Vec<usize> = raw_labels.iter().map(|&y| y as usize).collect();
    let k = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(features, labels, k)
}

pub fn write_idx_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &y in labels {
        let b = u8::try_from(y).map_err(|_| Error::Domain(format!("label {y} exceeds a byte")))?;
        out.push(b);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_idx_images(path: &Path, pixels: &[u8], count: usize, rows: usize, cols: usize) -> Result<()> {
    if pixels.len() != count * rows * cols {
        return Err(Error::Shape(format!(
            "{} pixels for {count} images of {rows}x{cols}",
            pixels.len()
        )));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for v in [count, rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let img = dir.join("img");
        let lbl = dir.join("lbl");
        write_idx_images(&img, &[0, 255, 51, 102, 0, 0, 255, 255], 2, 2, 2).unwrap();
        write_idx_labels(&lbl, &[3, 1]).unwrap();
        (img, lbl)
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = pair(dir.path());
        let ds = load_idx(&img, &lbl).unwrap();
        assert_eq!((ds.n(), ds.d(), ds.k()), (2, 4, 4));
        assert_eq!(ds.labels(), &[3, 1]);
        assert_eq!(ds.features()[[0, 1]], 1.0);
        assert!((ds.features()[[0, 2]] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bytes_are_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let (_, lbl) = pair(dir.path());
        let raw = fs::read(lbl).unwrap();
        assert_eq!(&raw[..8], &[0, 0, 8, 1, 0, 0, 0, 2]);
    }

    #[test]
    fn swapped_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = pair(dir.path());
        match load_idx(&lbl, &img) {
            Err(Error::Format { offset: 0, msg, .. }) => assert!(msg.contains("magic")),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(matches!(read_idx_labels(&img), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncation_and_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = pair(dir.path());
        let mut raw = fs::read(&img).unwrap();
        raw.truncate(raw.len() - 1);
        fs::write(&img, &raw).unwrap();
        assert!(matches!(read_idx_images(&img), Err(Error::Format { offset: 23, .. })));

        fs::write(&img, &raw[..10]).unwrap();
        assert!(matches!(read_idx_images(&img), Err(Error::Format { offset: 8, .. })));

        let (img, _) = pair(dir.path());
        write_idx_labels(&lbl, &[1, 2, 3]).unwrap();
        assert!(matches!(load_idx(&img, &lbl), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(
            read_idx_labels(Path::new("/nonexistent/labels")),
            Err(Error::Io { .. })
        ));
    }
}
