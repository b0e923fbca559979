//! Dataset manifests: sample records with class, split and feature locator.
//!
//! JSON layout:
//!
//! ```json
//! {
//!   "classes": [{"id": 0, "name": "pouring"}],
//!   "samples": [{"id": "c0000_00001", "class": 0, "split": "train",
//!                "feature_file": "train.fmx", "row": 17}]
//! }
//! ```

use crate::error::{Error, Result};
use crate::tailprops::ClassProfile;
use crate::ClassId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub class: ClassId,
    pub split: Split,
    pub feature_file: String,
    pub row: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<ClassEntry>,
    pub samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    /// Check the manifest invariants: unique sample ids, every referenced
    /// class in the class table, unique class ids.
    pub fn validate(&self) -> Result<()> {
        let mut class_ids = BTreeSet::new();
        for entry in &self.classes {
            if !class_ids.insert(entry.id) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate class id {}",
                    entry.id
                )));
            }
        }
        let mut sample_ids = BTreeSet::new();
        for sample in &self.samples {
            if !sample_ids.insert(sample.id.as_str()) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate sample id {:?}",
                    sample.id
                )));
            }
            if !class_ids.contains(&sample.class) {
                return Err(Error::InvalidManifest(format!(
                    "sample {:?} references unknown class {}",
                    sample.id, sample.class
                )));
            }
        }
        Ok(())
    }

    pub fn split_samples(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.split_samples(split).count()
    }

    /// Per-class sample counts within a split.
    pub fn split_counts(&self, split: Split) -> BTreeMap<ClassId, u64> {
        let mut counts = BTreeMap::new();
        for sample in self.split_samples(split) {
            *counts.entry(sample.class).or_insert(0) += 1;
        }
        counts
    }

    /// Class profile of a split. Classes with zero samples in the split are
    /// absent from the profile.
    pub fn profile(&self, split: Split) -> Result<ClassProfile> {
        let counts = self.split_counts(split);
        ClassProfile::new(counts.into_iter().collect())
    }

    pub fn class_name(&self, id: ClassId) -> Option<&str> {
        self.classes
            .iter()
            .find(|c| c.id == id)
            .map(|c| c.name.as_str())
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(&path)?;
        let manifest: DatasetManifest = serde_json::from_reader(std::io::BufReader::new(file))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(&path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut writer, self)?;
        use std::io::Write;
        writeln!(writer)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_manifest() -> DatasetManifest {
        DatasetManifest {
            classes: vec![
                ClassEntry {
                    id: 0,
                    name: "a".into(),
                },
                ClassEntry {
                    id: 1,
                    name: "b".into(),
                },
            ],
            samples: vec![
                SampleRecord {
                    id: "s0".into(),
                    class: 0,
                    split: Split::Train,
                    feature_file: "f.fmx".into(),
                    row: 0,
                },
                SampleRecord {
                    id: "s1".into(),
                    class: 1,
                    split: Split::Test,
                    feature_file: "f.fmx".into(),
                    row: 1,
                },
            ],
        }
    }

    #[test]
    fn validate_accepts_wellformed() {
        small_manifest().validate().unwrap();
    }

    #[test]
    fn validate_rejects_duplicate_sample() {
        let mut m = small_manifest();
        m.samples.push(m.samples[0].clone());
        assert!(m.validate().is_err());
    }

    #[test]
    fn validate_rejects_unknown_class() {
        let mut m = small_manifest();
        m.samples[0].class = 9;
        assert!(m.validate().is_err());
    }

    #[test]
    fn profile_counts_split_only() {
        let m = small_manifest();
        let p = m.profile(Split::Train).unwrap();
        assert_eq!(p.entries(), &[(0, 1)]);
    }

    #[test]
    fn json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = small_manifest();
        m.to_json_path(&path).unwrap();
        let back = DatasetManifest::from_json_path(&path).unwrap();
        assert_eq!(back, m);
    }
}
