//! Fashion-MNIST loader for the label-partitioned setting.
//!
//! Reads the four standard IDX files (big-endian 32-bit headers, raw
//! unsigned bytes; gzipped variants are accepted). Pixels are scaled to
//! [0, 1] by /255 and flattened to 784 features. The binary label is 1 for
//! the Shirt class (index 6) and the groups are label-partitioned: shirt is
//! group 0, non-shirt group 1.
//!
//! [`write_mirror_files`] synthesizes a procedural stand-in set with the
//! standard class balance (6,000 train / 1,000 test per class) in the same
//! IDX format.

use super::{descriptor_fingerprint, GroupedDataset, Split};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_SYNTH};
use flate2::read::GzDecoder;
use rand::Rng;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const SIDE: usize = 28;
const PIXELS: usize = SIDE * SIDE;

/// Class index of "Shirt" in the standard label list.
pub const SHIRT_CLASS: u8 = 6;

/// Group counts per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub train_shirt: usize,
    pub train_other: usize,
    pub test_shirt: usize,
    pub test_other: usize,
    pub fingerprint: u64,
}

fn open_maybe_gz(dir: &Path, name: &str) -> Result<Box<dyn Read>> {
    let raw = dir.join(name);
    if raw.exists() {
        return Ok(Box::new(BufReader::new(File::open(&raw)?)));
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.exists() {
        return Ok(Box::new(GzDecoder::new(BufReader::new(File::open(&gz)?))));
    }
    Err(Error::Data(format!(
        "missing {name} (or {name}.gz) under {}",
        dir.display()
    )))
}

fn read_u32_be(r: &mut dyn Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Data(format!("truncated {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

fn read_images(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let mut r = open_maybe_gz(dir, name)?;
    let magic = read_u32_be(&mut r, name)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Data(format!(
            "{name}: bad magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let n = read_u32_be(&mut r, name)? as usize;
    let rows = read_u32_be(&mut r, name)? as usize;
    let cols = read_u32_be(&mut r, name)? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(Error::Data(format!(
            "{name}: unexpected image size {rows}x{cols}"
        )));
    }
    let mut data = vec![0u8; n * PIXELS];
    r.read_exact(&mut data)
        .map_err(|e| Error::Data(format!("truncated {name}: {e}")))?;
    Ok(data)
}

fn read_labels(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let mut r = open_maybe_gz(dir, name)?;
    let magic = read_u32_be(&mut r, name)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Data(format!(
            "{name}: bad magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let n = read_u32_be(&mut r, name)? as usize;
    let mut data = vec![0u8; n];
    r.read_exact(&mut data)
        .map_err(|e| Error::Data(format!("truncated {name}: {e}")))?;
    Ok(data)
}

fn build_split(images: Vec<u8>, labels: Vec<u8>, split: Split, fp: u64) -> Result<GroupedDataset> {
    if images.len() != labels.len() * PIXELS {
        return Err(Error::Data(format!(
            "image/label count mismatch: {} pixels vs {} labels",
            images.len(),
            labels.len()
        )));
    }
    let x: Vec<f32> = images.iter().map(|&b| f32::from(b) / 255.0).collect();
    let y: Vec<u8> = labels.iter().map(|&c| u8::from(c == SHIRT_CLASS)).collect();
    // Label-partitioned grouping with shirt as the minority group 0.
    let group: Vec<u8> = y.iter().map(|&v| 1 - v).collect();
    GroupedDataset::from_parts(x, PIXELS, y, group, split, fp)
}

/// Load the train/test pair from a directory holding the four standard
/// files (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`,
/// `t10k-images-idx3-ubyte`, `t10k-labels-idx1-ubyte`, optionally gzipped).
pub fn load_fashion_mnist(dir: &Path) -> Result<(GroupedDataset, GroupedDataset, LoadSummary)> {
    let fp = descriptor_fingerprint("fashion-mnist|28x28|shirt-class=6|scale=1/255");
    let train = build_split(
        read_images(dir, "train-images-idx3-ubyte")?,
        read_labels(dir, "train-labels-idx1-ubyte")?,
        Split::Train,
        fp,
    )?;
    let test = build_split(
        read_images(dir, "t10k-images-idx3-ubyte")?,
        read_labels(dir, "t10k-labels-idx1-ubyte")?,
        Split::Test,
        fp,
    )?;
    let summary = LoadSummary {
        train_shirt: train.group_size(0),
        train_other: train.group_size(1),
        test_shirt: test.group_size(0),
        test_other: test.group_size(1),
        fingerprint: fp,
    };
    Ok((train, test, summary))
}

// ---------------------------------------------------------------------------
// Synthetic mirror
// ---------------------------------------------------------------------------

pub const MIRROR_TRAIN_PER_CLASS: usize = 6_000;
pub const MIRROR_TEST_PER_CLASS: usize = 1_000;

/// Fraction of shirt images drawn at a neighboring class's blob center,
/// making the shirt class genuinely hard to separate.
const SHIRT_CONFUSION: f64 = 0.30;
/// Fraction of non-shirt images drawn at the shirt center.
const OTHER_IMITATION: f64 = 0.025;

fn class_center(class: u8) -> (f64, f64) {
    let theta = 2.0 * std::f64::consts::PI * f64::from(class) / 10.0;
    (14.0 + 8.0 * theta.cos(), 14.0 + 8.0 * theta.sin())
}

fn render_image<R: Rng>(rng: &mut R, class: u8, out: &mut [u8]) {
    let effective = if class == SHIRT_CLASS {
        if rng.random::<f64>() < SHIRT_CONFUSION {
            if rng.random::<f64>() < 0.5 {
                5
            } else {
                7
            }
        } else {
            SHIRT_CLASS
        }
    } else if rng.random::<f64>() < OTHER_IMITATION {
        SHIRT_CLASS
    } else {
        class
    };
    let (cx, cy) = class_center(effective);
    let cx = cx + rng.random_range(-1.5..1.5);
    let cy = cy + rng.random_range(-1.5..1.5);
    for i in 0..SIDE {
        for j in 0..SIDE {
            let d2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
            let blob = 200.0 * (-d2 / 18.0).exp();
            let noise = rng.random_range(0.0..55.0);
            out[i * SIDE + j] = (blob + noise).min(255.0) as u8;
        }
    }
}

fn write_idx_images(path: &Path, images: &[u8], n: usize) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    f.write_all(&IMAGE_MAGIC.to_be_bytes())?;
    f.write_all(&(n as u32).to_be_bytes())?;
    f.write_all(&(SIDE as u32).to_be_bytes())?;
    f.write_all(&(SIDE as u32).to_be_bytes())?;
    f.write_all(images)?;
    Ok(())
}

fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    f.write_all(&LABEL_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)?;
    Ok(())
}

fn mirror_split<R: Rng>(rng: &mut R, per_class: usize) -> (Vec<u8>, Vec<u8>) {
    let n = per_class * 10;
    // Interleave classes 0..9 cyclically, then the file order is already
    // shuffled enough for uniform sampling downstream.
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let mut images = vec![0u8; n * PIXELS];
    for (i, &c) in labels.iter().enumerate() {
        render_image(rng, c, &mut images[i * PIXELS..(i + 1) * PIXELS]);
    }
    (images, labels)
}

/// Write the four IDX stand-in files into `dir` with the standard class
/// balance.
pub fn write_mirror_files(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let (train_images, train_labels) = mirror_split(&mut rng, MIRROR_TRAIN_PER_CLASS);
    let (test_images, test_labels) = mirror_split(&mut rng, MIRROR_TEST_PER_CLASS);
    write_idx_images(
        &dir.join("train-images-idx3-ubyte"),
        &train_images,
        train_labels.len(),
    )?;
    write_idx_labels(&dir.join("train-labels-idx1-ubyte"), &train_labels)?;
    write_idx_images(
        &dir.join("t10k-images-idx3-ubyte"),
        &test_images,
        test_labels.len(),
    )?;
    write_idx_labels(&dir.join("t10k-labels-idx1-ubyte"), &test_labels)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_idx_pair(dir: &Path, n_train: usize, n_test: usize) {
        let mut rng = stream_rng(1, 0);
        let train_labels: Vec<u8> = (0..n_train).map(|i| (i % 10) as u8).collect();
        let test_labels: Vec<u8> = (0..n_test).map(|i| (i % 10) as u8).collect();
        let mut train_images = vec![0u8; n_train * PIXELS];
        let mut test_images = vec![0u8; n_test * PIXELS];
        for (i, &c) in train_labels.iter().enumerate() {
            render_image(&mut rng, c, &mut train_images[i * PIXELS..(i + 1) * PIXELS]);
        }
        for (i, &c) in test_labels.iter().enumerate() {
            render_image(&mut rng, c, &mut test_images[i * PIXELS..(i + 1) * PIXELS]);
        }
        write_idx_images(&dir.join("train-images-idx3-ubyte"), &train_images, n_train).unwrap();
        write_idx_labels(&dir.join("train-labels-idx1-ubyte"), &train_labels).unwrap();
        write_idx_images(&dir.join("t10k-images-idx3-ubyte"), &test_images, n_test).unwrap();
        write_idx_labels(&dir.join("t10k-labels-idx1-ubyte"), &test_labels).unwrap();
    }

    #[test]
    fn loads_idx_and_partitions_by_label() {
        let dir = tempfile::tempdir().unwrap();
        tiny_idx_pair(dir.path(), 40, 20);
        let (train, test, summary) = load_fashion_mnist(dir.path()).unwrap();
        assert_eq!(train.len(), 40);
        assert_eq!(test.len(), 20);
        assert_eq!(train.dim(), 784);
        // 4 shirts out of 40 (classes cycle 0..9)
        assert_eq!(summary.train_shirt, 4);
        assert_eq!(summary.train_other, 36);
        assert_eq!(summary.test_shirt, 2);
        // shirt rows are group 0 with label 1
        for &i in train.group_indices(0) {
            assert_eq!(train.label(i), 1);
        }
        for &i in train.group_indices(1) {
            assert_eq!(train.label(i), 0);
        }
        // normalized pixels
        for i in 0..train.len() {
            assert!(train.row(i).iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
        assert_eq!(train.fingerprint(), test.fingerprint());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        tiny_idx_pair(dir.path(), 20, 10);
        // corrupt the train images magic
        let p = dir.path().join("train-images-idx3-ubyte");
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[3] = 0xff;
        std::fs::write(&p, bytes).unwrap();
        let err = load_fashion_mnist(dir.path()).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        tiny_idx_pair(dir.path(), 20, 10);
        let p = dir.path().join("t10k-images-idx3-ubyte");
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_fashion_mnist(dir.path()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn gzipped_files_are_accepted() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        let dir = tempfile::tempdir().unwrap();
        tiny_idx_pair(dir.path(), 20, 10);
        for name in [
            "train-images-idx3-ubyte",
            "train-labels-idx1-ubyte",
            "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte",
        ] {
            let raw = dir.path().join(name);
            let bytes = std::fs::read(&raw).unwrap();
            let gz = File::create(dir.path().join(format!("{name}.gz"))).unwrap();
            let mut enc = GzEncoder::new(gz, Compression::fast());
            enc.write_all(&bytes).unwrap();
            enc.finish().unwrap();
            std::fs::remove_file(&raw).unwrap();
        }
        let (train, _, _) = load_fashion_mnist(dir.path()).unwrap();
        assert_eq!(train.len(), 20);
    }

    #[test]
    fn missing_file_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_fashion_mnist(dir.path()).unwrap_err();
        assert!(err.to_string().contains("train-images"), "{err}");
    }
}
