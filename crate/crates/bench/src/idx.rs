//! IDX files as distributed with MNIST: a big-endian header followed by
//! unsigned byte payload.

use std::path::Path;

use entropic_ot::Matrix;

use crate::error::{BenchError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<Vec<Matrix>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| BenchError::io(path, e))?;
    parse_idx_images(&bytes, path)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| BenchError::io(path, e))?;
    parse_idx_labels(&bytes, path)
}

fn header(bytes: &[u8], path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let need = 4 + 4 * dims;
    if bytes.len() < 4 {
        return Err(BenchError::Truncated { path: path.into(), what: "header", expected: need, actual: bytes.len() });
    }
    let word = |k: usize| u32::from_be_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(BenchError::BadMagic { path: path.into(), observed: bytes[..4].to_vec(), expected: magic });
    }
    if bytes.len() < need {
        return Err(BenchError::Truncated { path: path.into(), what: "header", expected: need, actual: bytes.len() });
    }
    Ok((1..=dims).map(|k| word(k) as usize).collect())
}

fn payload<'a>(bytes: &'a [u8], path: &Path, offset: usize, len: usize) -> Result<&'a [u8]> {
    let actual = bytes.len() - offset;
    if actual != len {
        return Err(BenchError::Truncated { path: path.into(), what: "payload", expected: len, actual });
    }
    Ok(&bytes[offset..])
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Matrix>> {
    let dims = header(bytes, path, IMAGE_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let size = rows * cols;
    let data = payload(bytes, path, 16, count * size)?;
    Ok(data
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| Matrix::from_vec(rows, cols, px.iter().map(|&b| f64::from(b)).collect()).expect("chunk has rows * cols pixels"))
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let dims = header(bytes, path, LABEL_MAGIC, 1)?;
    Ok(payload(bytes, path, 8, dims[0])?.to_vec())
}

/// Serializes images to IDX bytes. Pixels must be integers in `0..=255`.
pub fn encode_idx_images(images: &[Matrix]) -> Vec<u8> {
    let (rows, cols) = images.first().map_or((0, 0), |m| (m.rows(), m.cols()));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for word in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        assert_eq!((img.rows(), img.cols()), (rows, cols), "images must share dimensions");
        out.extend(img.as_slice().iter().map(|&p| p as u8));
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_fixture() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend(0u8..8);
        b
    }

    #[test]
    fn parses_small_image_file() {
        let imgs = parse_idx_images(&image_fixture(), Path::new("x")).unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!(imgs[0].as_slice(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(imgs[1][(1, 0)], 6.0);
    }

    #[test]
    fn parses_labels() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9];
        assert_eq!(parse_idx_labels(&bytes, Path::new("l")).unwrap(), vec![7, 0, 9]);
    }

    #[test]
    fn rejects_wrong_magic() {
        let err = parse_idx_labels(&image_fixture(), Path::new("x")).unwrap_err();
        assert!(matches!(err, BenchError::BadMagic { expected: LABEL_MAGIC, .. }), "{err}");
    }

    #[test]
    fn rejects_empty_and_short_files() {
        assert!(matches!(parse_idx_images(&[], Path::new("x")), Err(BenchError::Truncated { .. })));
        let mut b = image_fixture();
        b.pop();
        assert!(matches!(parse_idx_images(&b, Path::new("x")), Err(BenchError::Truncated { expected: 8, actual: 7, .. })));
        let labels = [0, 0, 8, 1, 0, 0, 0, 4, 7, 0, 9];
        assert!(matches!(parse_idx_labels(&labels, Path::new("l")), Err(BenchError::Truncated { .. })));
    }

    #[test]
    fn encode_round_trips_bytes() {
        let bytes = image_fixture();
        let imgs = parse_idx_images(&bytes, Path::new("x")).unwrap();
        assert_eq!(encode_idx_images(&imgs), bytes);
        let labels = [3u8, 1, 4, 1, 5];
        assert_eq!(parse_idx_labels(&encode_idx_labels(&labels), Path::new("l")).unwrap(), labels);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_idx_images("/nonexistent/train-images"), Err(BenchError::Io { .. })));
    }
}
