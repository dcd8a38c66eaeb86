//! MNIST ingestion from IDX files and deterministic class-balanced
//! selection.
//!
//! IDX is big-endian: a 4-byte magic (`0x00000803` for rank-3 unsigned-byte
//! images, `0x00000801` for rank-1 labels), one 4-byte size per dimension,
//! then the raw payload. Files starting with the gzip magic `1F 8B` are
//! inflated first.

use std::borrow::Cow;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const MAX_LABEL: u8 = 9;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";

/// Images in `[0, 1]` paired with labels in `0..=9`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    images: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Every image must have the same width and lie in `[0, 1]`.
    pub fn new(images: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "dataset labels",
                expected: images.len(),
                found: labels.len(),
            });
        }
        if let Some(first) = images.first() {
            let width = first.len();
            for img in &images {
                if img.len() != width {
                    return Err(Error::LengthMismatch {
                        what: "dataset image width",
                        expected: width,
                        found: img.len(),
                    });
                }
                if img.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidConfig(
                        "image values must lie in [0, 1]".into(),
                    ));
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > MAX_LABEL) {
            return Err(Error::InvalidConfig(format!("label {bad} exceeds {MAX_LABEL}")));
        }
        Ok(Dataset { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Width of every image, 0 for an empty set.
    pub fn input_dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut images = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::OutOfRange {
                    index: i,
                    bound: self.len(),
                });
            }
            images.push(self.images[i].clone());
            labels.push(self.labels[i]);
        }
        Ok(Dataset { images, labels })
    }
}

fn inflate(bytes: &[u8]) -> Result<Cow<'_, [u8]>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| Error::Idx(format!("gzip: {e}")))?;
        Ok(Cow::Owned(out))
    } else {
        Ok(Cow::Borrowed(bytes))
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| {
            Error::Idx(format!(
                "header truncated: need 4 bytes at offset {offset}, have {}",
                bytes.len()
            ))
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Idx(format!(
            "bad magic 0x{magic:08x} at offset 0, expected 0x{expected:08x}"
        )));
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    let end = start + len;
    if bytes.len() < end {
        return Err(Error::Idx(format!(
            "payload truncated at byte offset {}: declared {len} bytes from offset {start}",
            bytes.len()
        )));
    }
    Ok(&bytes[start..end])
}

/// Rank-3 image file to flat 784-pixel rows scaled into `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bytes = inflate(bytes)?;
    check_magic(&bytes, IMAGE_MAGIC)?;
    let count = read_u32(&bytes, 4)? as usize;
    let rows = read_u32(&bytes, 8)? as usize;
    let cols = read_u32(&bytes, 12)? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::Idx(format!(
            "image dims {rows}x{cols}, expected {IMAGE_SIDE}x{IMAGE_SIDE}"
        )));
    }
    let data = payload(&bytes, 16, count * IMAGE_PIXELS)?;
    Ok(data
        .chunks_exact(IMAGE_PIXELS)
        .map(|px| px.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect())
}

/// Rank-1 label file; every byte must be a digit `0..=9`.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let bytes = inflate(bytes)?;
    check_magic(&bytes, LABEL_MAGIC)?;
    let count = read_u32(&bytes, 4)? as usize;
    let data = payload(&bytes, 8, count)?;
    if let Some(pos) = data.iter().position(|&l| l > MAX_LABEL) {
        return Err(Error::Idx(format!(
            "label {} at byte offset {} exceeds {MAX_LABEL}",
            data[pos],
            8 + pos
        )));
    }
    Ok(data.to_vec())
}

/// Inverse of [`parse_idx_images`] for 784-pixel rows (uncompressed).
pub fn encode_idx_images(images: &[Vec<f64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * IMAGE_PIXELS);
    for word in [IMAGE_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend(img.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    out
}

/// Inverse of [`parse_idx_labels`] (uncompressed).
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Pairs parsed image and label payloads.
pub fn dataset_from_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Dataset> {
    let images = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if images.len() != labels.len() {
        return Err(Error::Idx(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    Dataset::new(images, labels)
}

fn read_either(dir: &Path, stem: &str) -> Result<Vec<u8>> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let path = dir.join(&name);
        if path.is_file() {
            return std::fs::read(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())));
        }
    }
    Err(Error::Io(format!(
        "{}: neither {stem} nor {stem}.gz found",
        dir.display()
    )))
}

/// Loads the training split from `dir`, accepting plain or gzipped files.
pub fn load_mnist(dir: &Path) -> Result<Dataset> {
    let images = read_either(dir, TRAIN_IMAGES)?;
    let labels = read_either(dir, TRAIN_LABELS)?;
    dataset_from_idx(&images, &labels)
}

/// Per-class quotas summing to `total`; the lowest labels absorb the
/// remainder.
pub fn class_quotas(total: usize, classes: usize) -> Vec<usize> {
    (0..classes)
        .map(|c| total / classes + usize::from(c < total % classes))
        .collect()
}

fn balanced_indices(
    dataset: &Dataset,
    total: usize,
    classes: usize,
    seed: u64,
    exclude: &[usize],
) -> Result<Vec<usize>> {
    if classes == 0 || classes > usize::from(MAX_LABEL) + 1 {
        return Err(Error::InvalidConfig(format!(
            "classes must be in 1..=10, got {classes}"
        )));
    }
    let mut excluded = vec![false; dataset.len()];
    for &i in exclude {
        if let Some(slot) = excluded.get_mut(i) {
            *slot = true;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(total);
    for (class, quota) in class_quotas(total, classes).into_iter().enumerate() {
        let mut pool: Vec<usize> = (0..dataset.len())
            .filter(|&i| !excluded[i] && usize::from(dataset.labels[i]) == class)
            .collect();
        if pool.len() < quota {
            return Err(Error::InsufficientSamples {
                class: class as u8,
                needed: quota,
                available: pool.len(),
            });
        }
        pool.shuffle(&mut rng);
        chosen.extend_from_slice(&pool[..quota]);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Seeded class-balanced selection over labels `0..classes`. Indices are
/// returned in ascending (original) order.
pub fn select_balanced(dataset: &Dataset, total: usize, classes: usize, seed: u64) -> Result<Vec<usize>> {
    balanced_indices(dataset, total, classes, seed, &[])
}

/// As [`select_balanced`] but never picks an index from `exclude`.
pub fn select_held_out(
    dataset: &Dataset,
    exclude: &[usize],
    total: usize,
    classes: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    balanced_indices(dataset, total, classes, seed, exclude)
}

pub fn take_balanced(dataset: &Dataset, total: usize, classes: usize, seed: u64) -> Result<Dataset> {
    dataset.subset(&select_balanced(dataset, total, classes, seed)?)
}
