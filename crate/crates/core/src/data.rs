//! Dataset ingestion and synthesis: IDX-format image and label files,
//! deterministic synthetic sets for small experiments, and seeded splits.
//!
//! IDX files are big-endian: a 4-byte magic (2051 for u8 images with three
//! dimensions, 2049 for u8 labels with one), one 4-byte size per dimension,
//! then the raw bytes. Pixels are scaled by 1/255 on load; nothing outside
//! [0, 1] survives ingestion. Saving quantizes each value to the nearest
//! of the 256 byte levels, so any dataset that came from an IDX file (or a
//! generator that pre-quantizes, as the blob generator does) round-trips
//! byte-exactly.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fs;
use std::path::Path;

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

/// A batch of flattened images with values in [0, 1], plus optional labels
/// carried through untouched for external analysis.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// N x (height * width), row-major pixels.
    pub x: Tensor,
    pub labels: Option<Vec<u8>>,
    pub height: usize,
    pub width: usize,
}

impl Dataset {
    pub fn new(x: Tensor, height: usize, width: usize) -> Result<Self> {
        if height * width != x.cols {
            return Err(Error::InvalidArgument {
                name: "dataset shape",
                detail: format!("{}x{} images cannot have {} pixels", height, width, x.cols),
            });
        }
        if x.data.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument {
                name: "dataset pixels",
                detail: "values must lie in [0, 1]".into(),
            });
        }
        Ok(Dataset {
            x,
            labels: None,
            height,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.x.rows
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows == 0
    }

    /// Pixels per image.
    pub fn dim(&self) -> usize {
        self.x.cols
    }

    /// Gathers the given rows (repeats allowed) into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let d = self.dim();
        let mut x = Tensor::zeros(indices.len(), d);
        for (r, &i) in indices.iter().enumerate() {
            if i >= self.len() {
                return Err(Error::InvalidArgument {
                    name: "dataset index",
                    detail: format!("{} out of range for {} examples", i, self.len()),
                });
            }
            x.data[r * d..(r + 1) * d].copy_from_slice(self.x.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Ok(Dataset {
            x,
            labels,
            height: self.height,
            width: self.width,
        })
    }

    /// The given rows as a bare matrix, for batch assembly.
    pub fn gather(&self, indices: &[usize]) -> Result<Tensor> {
        Ok(self.select(indices)?.x)
    }
}

fn read_u32_be(bytes: &[u8], pos: usize, path: &Path) -> Result<u32> {
    let end = pos + 4;
    if end > bytes.len() {
        return Err(Error::DataFormat {
            path: path.display().to_string(),
            detail: format!("truncated header: need {} bytes, file has {}", end, bytes.len()),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[pos],
        bytes[pos + 1],
        bytes[pos + 2],
        bytes[pos + 3],
    ]))
}

/// Loads an IDX image file, and optionally a matching IDX label file whose
/// count must agree with the image count.
pub fn load_idx(images: &Path, labels: Option<&Path>) -> Result<Dataset> {
    let bytes = fs::read(images).map_err(|e| Error::DataFormat {
        path: images.display().to_string(),
        detail: format!("cannot read: {e}"),
    })?;
    let magic = read_u32_be(&bytes, 0, images)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::DataFormat {
            path: images.display().to_string(),
            detail: format!("bad image magic {magic}, expected {IMAGE_MAGIC}"),
        });
    }
    let n = read_u32_be(&bytes, 4, images)? as usize;
    let height = read_u32_be(&bytes, 8, images)? as usize;
    let width = read_u32_be(&bytes, 12, images)? as usize;
    let expected = 16 + n * height * width;
    if bytes.len() != expected {
        return Err(Error::DataFormat {
            path: images.display().to_string(),
            detail: format!(
                "payload is {} bytes, header promises {}",
                bytes.len() - 16.min(bytes.len()),
                expected - 16
            ),
        });
    }
    let d = height * width;
    let mut x = Tensor::zeros(n, d);
    for (v, &b) in x.data.iter_mut().zip(&bytes[16..]) {
        *v = b as f64 / 255.0;
    }
    let mut ds = Dataset {
        x,
        labels: None,
        height,
        width,
    };
    if let Some(lp) = labels {
        let lab = load_idx_labels(lp)?;
        if lab.len() != n {
            return Err(Error::DataFormat {
                path: lp.display().to_string(),
                detail: format!("{} labels for {} images", lab.len(), n),
            });
        }
        ds.labels = Some(lab);
    }
    Ok(ds)
}

/// Loads an IDX label file (one u8 per example).
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::DataFormat {
        path: path.display().to_string(),
        detail: format!("cannot read: {e}"),
    })?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(Error::DataFormat {
            path: path.display().to_string(),
            detail: format!("bad label magic {magic}, expected {LABEL_MAGIC}"),
        });
    }
    let n = read_u32_be(&bytes, 4, path)? as usize;
    if bytes.len() != 8 + n {
        return Err(Error::DataFormat {
            path: path.display().to_string(),
            detail: format!("payload is {} bytes, header promises {n}", bytes.len() - 8.min(bytes.len())),
        });
    }
    Ok(bytes[8..].to_vec())
}

/// Writes the images of `ds` as an IDX file, quantizing each pixel to the
/// nearest byte level.
pub fn save_idx(path: &Path, ds: &Dataset) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + ds.len() * ds.dim());
    bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(ds.height as u32).to_be_bytes());
    bytes.extend_from_slice(&(ds.width as u32).to_be_bytes());
    for &v in &ds.x.data {
        bytes.push((v * 255.0).round() as u8);
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes labels as an IDX file.
pub fn save_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes)?;
    Ok(())
}

/// Families of synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// min(N, D) distinct one-hot vectors, cycled to fill N rows.
    OneHot,
    /// Independent fair coin flips per pixel.
    RandomBinary,
    /// One soft Gaussian bump per image at a random position and scale;
    /// requires a square pixel count. Pre-quantized to byte levels so the
    /// IDX round trip is exact.
    Blob,
}

/// Deterministically generates a synthetic dataset of `n` examples with `d`
/// pixels each.
pub fn synth_dataset(kind: SynthKind, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument {
            name: "synthetic dataset size",
            detail: format!("need n, d >= 1, got n={n} d={d}"),
        });
    }
    let mut rng = stream(seed, StreamRole::Synthesis);
    match kind {
        SynthKind::OneHot => {
            let distinct = n.min(d);
            let mut x = Tensor::zeros(n, d);
            for i in 0..n {
                *x.at_mut(i, i % distinct) = 1.0;
            }
            Dataset::new(x, 1, d)
        }
        SynthKind::RandomBinary => {
            let mut x = Tensor::zeros(n, d);
            for v in &mut x.data {
                *v = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
            }
            Dataset::new(x, 1, d)
        }
        SynthKind::Blob => {
            let side = (d as f64).sqrt().round() as usize;
            if side * side != d {
                return Err(Error::InvalidArgument {
                    name: "blob pixel count",
                    detail: format!("{d} is not a perfect square"),
                });
            }
            let mut x = Tensor::zeros(n, d);
            let s = side as f64;
            for i in 0..n {
                let cr = rng.gen_range(0.25..0.75) * s;
                let cc = rng.gen_range(0.25..0.75) * s;
                let sigma = rng.gen_range(0.08..0.20) * s;
                let amp = rng.gen_range(0.7..1.0);
                for r in 0..side {
                    for c in 0..side {
                        let dr = r as f64 + 0.5 - cr;
                        let dc = c as f64 + 0.5 - cc;
                        let v = amp * (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp();
                        *x.at_mut(i, r * side + c) = (v * 255.0).round() / 255.0;
                    }
                }
            }
            Dataset::new(x, side, side)
        }
    }
}

/// Splits into (train, valid) with `valid_fraction` of examples (rounded)
/// going to the validation side, assignment shuffled by `seed`.
pub fn split(ds: &Dataset, valid_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(Error::InvalidArgument {
            name: "valid_fraction",
            detail: format!("must lie strictly between 0 and 1, got {valid_fraction}"),
        });
    }
    let n = ds.len();
    let n_valid = (n as f64 * valid_fraction).round() as usize;
    if n_valid == 0 || n_valid == n {
        return Err(Error::InvalidArgument {
            name: "valid_fraction",
            detail: format!("{valid_fraction} of {n} examples leaves an empty split"),
        });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = stream(seed, StreamRole::DataShuffle);
    indices.shuffle(&mut rng);
    let (valid_idx, train_idx) = indices.split_at(n_valid);
    Ok((ds.select(train_idx)?, ds.select(valid_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn idx_file_round_trips_byte_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("images.idx");
        // Hand-built file: 2 images of 2x3 pixels.
        let mut original = Vec::new();
        original.extend_from_slice(&2051u32.to_be_bytes());
        original.extend_from_slice(&2u32.to_be_bytes());
        original.extend_from_slice(&2u32.to_be_bytes());
        original.extend_from_slice(&3u32.to_be_bytes());
        original.extend_from_slice(&[0, 17, 128, 255, 64, 200, 3, 250, 90, 45, 11, 222]);
        fs::write(&path, &original).unwrap();
        let ds = load_idx(&path, None).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!((ds.height, ds.width), (2, 3));
        assert_eq!(ds.x.at(0, 3), 1.0);
        assert_eq!(ds.x.at(0, 0), 0.0);
        let out = dir.path().join("again.idx");
        save_idx(&out, &ds).unwrap();
        assert_eq!(fs::read(&out).unwrap(), original);
    }

    #[test]
    fn labels_round_trip_and_count_mismatch_is_reported() {
        let dir = tempdir().unwrap();
        let ip = dir.path().join("images.idx");
        let lp = dir.path().join("labels.idx");
        let ds = synth_dataset(SynthKind::Blob, 5, 16, 3).unwrap();
        save_idx(&ip, &ds).unwrap();
        save_idx_labels(&lp, &[7, 1, 3, 0, 9]).unwrap();
        let loaded = load_idx(&ip, Some(&lp)).unwrap();
        assert_eq!(loaded.labels.as_deref(), Some(&[7, 1, 3, 0, 9][..]));
        save_idx_labels(&lp, &[1, 2]).unwrap();
        let err = load_idx(&ip, Some(&lp)).unwrap_err();
        assert!(matches!(err, Error::DataFormat { .. }), "{err}");
    }

    #[test]
    fn bad_magic_and_truncation_are_distinct_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&1234u32.to_be_bytes());
        bytes.extend_from_slice(&[0; 12]);
        fs::write(&path, &bytes).unwrap();
        let magic_err = format!("{}", load_idx(&path, None).unwrap_err());
        assert!(magic_err.contains("magic"), "{magic_err}");

        let mut ok = Vec::new();
        ok.extend_from_slice(&2051u32.to_be_bytes());
        ok.extend_from_slice(&2u32.to_be_bytes());
        ok.extend_from_slice(&2u32.to_be_bytes());
        ok.extend_from_slice(&2u32.to_be_bytes());
        ok.extend_from_slice(&[9; 3]);
        fs::write(&path, &ok).unwrap();
        let trunc_err = format!("{}", load_idx(&path, None).unwrap_err());
        assert!(trunc_err.contains("promises"), "{trunc_err}");
    }

    #[test]
    fn loaded_pixels_stay_inside_unit_interval() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("images.idx");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2051u32.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&4u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 255, 128, 1]);
        fs::write(&path, &bytes).unwrap();
        let ds = load_idx(&path, None).unwrap();
        assert!(ds.x.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(ds.x.at(0, 1), 1.0);
    }

    #[test]
    fn one_hot_cycles_distinct_patterns() {
        let ds = synth_dataset(SynthKind::OneHot, 4, 8, 0).unwrap();
        assert_eq!(ds.len(), 4);
        for i in 0..4 {
            assert_eq!(ds.x.row(i).iter().sum::<f64>(), 1.0);
            assert_eq!(ds.x.at(i, i), 1.0);
        }
        let cycled = synth_dataset(SynthKind::OneHot, 10, 4, 0).unwrap();
        assert_eq!(cycled.x.row(0), cycled.x.row(4));
        assert_eq!(cycled.x.row(1), cycled.x.row(9));
        assert_ne!(cycled.x.row(0), cycled.x.row(1));
    }

    #[test]
    fn random_binary_is_seed_deterministic() {
        let a = synth_dataset(SynthKind::RandomBinary, 6, 5, 42).unwrap();
        let b = synth_dataset(SynthKind::RandomBinary, 6, 5, 42).unwrap();
        let c = synth_dataset(SynthKind::RandomBinary, 6, 5, 43).unwrap();
        assert_eq!(a.x.data, b.x.data);
        assert_ne!(a.x.data, c.x.data);
        assert!(a.x.data.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn blobs_are_quantized_nonconstant_and_square_only() {
        let ds = synth_dataset(SynthKind::Blob, 8, 16, 7).unwrap();
        assert_eq!((ds.height, ds.width), (4, 4));
        for &v in &ds.x.data {
            assert!((0.0..=1.0).contains(&v));
            let scaled = v * 255.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
        let first = ds.x.row(0);
        assert!(ds.x.row(1) != first || ds.x.row(2) != first);
        assert!(matches!(
            synth_dataset(SynthKind::Blob, 2, 15, 7),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn split_partitions_deterministically() {
        let ds = synth_dataset(SynthKind::RandomBinary, 10, 4, 5).unwrap();
        let (train, valid) = split(&ds, 0.2, 11).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(valid.len(), 2);
        let (t2, v2) = split(&ds, 0.2, 11).unwrap();
        assert_eq!(train.x.data, t2.x.data);
        assert_eq!(valid.x.data, v2.x.data);
        // Union recovers the original multiset of rows.
        let mut rows: Vec<Vec<u8>> = train
            .x
            .data
            .chunks(4)
            .chain(valid.x.data.chunks(4))
            .map(|r| r.iter().map(|&v| v as u8).collect())
            .collect();
        let mut orig: Vec<Vec<u8>> = ds
            .x
            .data
            .chunks(4)
            .map(|r| r.iter().map(|&v| v as u8).collect())
            .collect();
        rows.sort();
        orig.sort();
        assert_eq!(rows, orig);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let ds = synth_dataset(SynthKind::RandomBinary, 3, 2, 1).unwrap();
        assert!(split(&ds, 0.1, 0).is_err());
        assert!(split(&ds, 0.99, 0).is_err());
        assert!(split(&ds, 0.0, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn select_gathers_rows_and_labels() {
        let mut ds = synth_dataset(SynthKind::OneHot, 4, 4, 0).unwrap();
        ds.labels = Some(vec![10, 11, 12, 13]);
        let picked = ds.select(&[2, 0, 2]).unwrap();
        assert_eq!(picked.len(), 3);
        assert_eq!(picked.x.row(0), ds.x.row(2));
        assert_eq!(picked.x.row(2), ds.x.row(2));
        assert_eq!(picked.labels, Some(vec![12, 10, 12]));
        assert!(ds.select(&[4]).is_err());
    }
}
