//! Feature matrix files.
//!
//! Binary layout, all little-endian: magic `TFFM`, version `u32`, rows `u32`,
//! cols `u32`, then `rows × cols` IEEE-754 `f32` values in row-major order.
//! Manifests reference samples as `(feature_file, row)`.

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, SampleRecord};
use crate::matrix::Matrix;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const FEATURE_MAGIC: [u8; 4] = *b"TFFM";
pub const FEATURE_VERSION: u32 = 1;

/// In-memory contents of one feature file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: u32,
    cols: u32,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: u32, cols: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows as usize * cols as usize {
            return Err(Error::FeatureFile {
                path: "<memory>".into(),
                message: format!(
                    "data length {} does not match {}x{}",
                    data.len(),
                    rows,
                    cols
                ),
            });
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn row(&self, index: u32) -> Result<&[f32]> {
        if index >= self.rows {
            return Err(Error::FeatureFile {
                path: "<memory>".into(),
                message: format!("row {} out of range ({} rows)", index, self.rows),
            });
        }
        let start = index as usize * self.cols as usize;
        Ok(&self.data[start..start + self.cols as usize])
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        file.write_all(&FEATURE_MAGIC)?;
        file.write_all(&FEATURE_VERSION.to_le_bytes())?;
        file.write_all(&self.rows.to_le_bytes())?;
        file.write_all(&self.cols.to_le_bytes())?;
        for v in &self.data {
            file.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let display = path.as_ref().display().to_string();
        let err = |message: String| Error::FeatureFile {
            path: display.clone(),
            message,
        };
        let mut file = std::io::BufReader::new(std::fs::File::open(&path)?);
        let mut magic = [0u8; 4];
        file.read_exact(&mut magic)?;
        if magic != FEATURE_MAGIC {
            return Err(err(format!("bad magic {magic:?}")));
        }
        let mut word = [0u8; 4];
        file.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FEATURE_VERSION {
            return Err(err(format!("unsupported version {version}")));
        }
        file.read_exact(&mut word)?;
        let rows = u32::from_le_bytes(word);
        file.read_exact(&mut word)?;
        let cols = u32::from_le_bytes(word);
        let expected = rows as usize * cols as usize;
        let mut data = Vec::with_capacity(expected);
        let mut buf = [0u8; 4];
        for _ in 0..expected {
            file.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf));
        }
        if file.read(&mut buf)? != 0 {
            return Err(err("trailing bytes after payload".into()));
        }
        FeatureMatrix::new(rows, cols, data)
    }
}

/// All feature files referenced by a manifest, loaded eagerly and keyed by
/// the manifest-relative file name.
pub struct FeatureStore {
    files: BTreeMap<String, FeatureMatrix>,
}

impl FeatureStore {
    pub fn from_single(name: impl Into<String>, features: FeatureMatrix) -> Self {
        let mut files = BTreeMap::new();
        files.insert(name.into(), features);
        FeatureStore { files }
    }

    /// Load every feature file a manifest mentions, resolving names against
    /// `root`.
    pub fn load_for_manifest(root: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<Self> {
        let root: PathBuf = root.as_ref().to_path_buf();
        let mut files = BTreeMap::new();
        for sample in &manifest.samples {
            if !files.contains_key(&sample.feature_file) {
                let matrix = FeatureMatrix::read_from(root.join(&sample.feature_file))?;
                files.insert(sample.feature_file.clone(), matrix);
            }
        }
        Ok(FeatureStore { files })
    }

    pub fn feature_dim(&self) -> Option<u32> {
        self.files.values().next().map(FeatureMatrix::cols)
    }

    pub fn row(&self, file: &str, row: u32) -> Result<&[f32]> {
        let matrix = self.files.get(file).ok_or_else(|| Error::FeatureFile {
            path: file.into(),
            message: "not loaded".into(),
        })?;
        matrix.row(row)
    }

    /// Gather the feature rows of the given samples into a `B×D` matrix
    /// (values widened to f64).
    pub fn gather(&self, samples: &[&SampleRecord]) -> Result<Matrix> {
        let dim = self.feature_dim().ok_or_else(|| Error::FeatureFile {
            path: "<store>".into(),
            message: "no feature files loaded".into(),
        })? as usize;
        let mut data = Vec::with_capacity(samples.len() * dim);
        for sample in samples {
            let row = self.row(&sample.feature_file, sample.row)?;
            if row.len() != dim {
                return Err(Error::FeatureFile {
                    path: sample.feature_file.clone(),
                    message: format!("row width {} != {}", row.len(), dim),
                });
            }
            data.extend(row.iter().map(|&v| v as f64));
        }
        Matrix::new(samples.len(), dim, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fmx");
        let m = FeatureMatrix::new(2, 3, vec![1.0, -2.5, 0.0, 3.25, f32::MIN, f32::MAX]).unwrap();
        m.write_to(&path).unwrap();
        let back = FeatureMatrix::read_from(&path).unwrap();
        assert_eq!(back, m);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"TFFM");
        assert_eq!(bytes.len(), 16 + 6 * 4);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fmx");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(FeatureMatrix::read_from(&path).is_err());
    }

    #[test]
    fn row_out_of_range() {
        let m = FeatureMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(m.row(1).is_err());
    }
}
