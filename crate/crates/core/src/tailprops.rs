//! Long-tail distribution properties and head/tail/few-shot grouping.
//!
//! Given per-class training counts, three numbers summarise how long-tailed a
//! dataset is:
//!
//! * head length `H%` — the fraction of classes that, ranked by size, jointly
//!   hold `x` of the training samples (default `x = 0.5`);
//! * few-shot length `F%` — the fraction of classes with at most `ω` training
//!   samples (default `ω = 20`);
//! * imbalance `I` — largest count over smallest count.
//!
//! The head is the *minimal* size-descending prefix whose cumulative count
//! reaches `x · total`, so the class that crosses the threshold is included.
//! Ties in count are broken by ascending class id for reproducibility.

use crate::error::{Error, Result};
use crate::ClassId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Per-class training counts. Non-empty, unique class ids, counts ≥ 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassProfile {
    entries: Vec<(ClassId, u64)>,
}

impl ClassProfile {
    pub fn new(entries: Vec<(ClassId, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(id, count) in &entries {
            if count == 0 {
                return Err(Error::InvalidProfile(format!("class {id} has count 0")));
            }
            if !seen.insert(id) {
                return Err(Error::InvalidProfile(format!("duplicate class id {id}")));
            }
        }
        Ok(ClassProfile { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    pub fn entries(&self) -> &[(ClassId, u64)] {
        &self.entries
    }

    pub fn count(&self, class: ClassId) -> Option<u64> {
        self.entries
            .iter()
            .find(|&&(id, _)| id == class)
            .map(|&(_, c)| c)
    }

    pub fn max_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).max().unwrap_or(0)
    }

    pub fn min_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).min().unwrap_or(0)
    }

    /// Classes ranked by descending count, ties broken by ascending id.
    pub fn ranked(&self) -> Vec<(ClassId, u64)> {
        let mut ranked = self.entries.clone();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }

    /// Lookup table from class id to count.
    pub fn count_map(&self) -> BTreeMap<ClassId, u64> {
        self.entries.iter().copied().collect()
    }

    /// Read `class_id,count` lines. A `class_id,count` header is accepted.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if idx == 0 && trimmed.starts_with("class_id") {
                continue;
            }
            let mut parts = trimmed.split(',');
            let id = parts
                .next()
                .and_then(|s| s.trim().parse::<ClassId>().ok())
                .ok_or_else(|| Error::ProfileCsv {
                    line: line_no,
                    message: format!("cannot parse class id in {trimmed:?}"),
                })?;
            let count = parts
                .next()
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| Error::ProfileCsv {
                    line: line_no,
                    message: format!("cannot parse count in {trimmed:?}"),
                })?;
            if parts.next().is_some() {
                return Err(Error::ProfileCsv {
                    line: line_no,
                    message: "expected exactly two fields".into(),
                });
            }
            entries.push((id, count));
        }
        ClassProfile::new(entries)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn to_csv_writer(&self, mut writer: impl Write) -> Result<()> {
        writeln!(writer, "class_id,count")?;
        for &(id, count) in &self.entries {
            writeln!(writer, "{id},{count}")?;
        }
        Ok(())
    }

    pub fn to_csv_path(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.to_csv_writer(&mut file)
    }
}

/// The three properties plus the parameters they were measured with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongTailProperties {
    /// Head length H%, in (0, 100].
    pub head_length_pct: f64,
    /// Few-shot length F%, in [0, 100].
    pub fewshot_length_pct: f64,
    /// Imbalance I = max count / min count, ≥ 1.
    pub imbalance: f64,
    /// Head data fraction `x` used for H%.
    pub head_fraction: f64,
    /// Few-shot threshold `ω` used for F%.
    pub fewshot_threshold: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Head,
    Tail,
    FewShot,
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::Head => write!(f, "head"),
            Group::Tail => write!(f, "tail"),
            Group::FewShot => write!(f, "few-shot"),
        }
    }
}

/// Partition of all classes into head / tail / few-shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment {
    groups: BTreeMap<ClassId, Group>,
    pub head_fraction: f64,
    pub fewshot_threshold: u64,
}

impl GroupAssignment {
    pub fn group(&self, class: ClassId) -> Option<Group> {
        self.groups.get(&class).copied()
    }

    pub fn classes_in(&self, group: Group) -> Vec<ClassId> {
        self.groups
            .iter()
            .filter(|&(_, g)| *g == group)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, Group)> + '_ {
        self.groups.iter().map(|(&id, &g)| (id, g))
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Size of the minimal size-descending prefix holding `x` of the samples.
fn head_prefix_len(ranked: &[(ClassId, u64)], total: u64, x: f64) -> usize {
    let threshold = x * total as f64;
    let mut cumulative = 0u64;
    for (idx, &(_, count)) in ranked.iter().enumerate() {
        cumulative += count;
        if cumulative as f64 >= threshold {
            return idx + 1;
        }
    }
    ranked.len()
}

/// Measure H%, F% and I for a profile.
pub fn compute_properties(profile: &ClassProfile, x: f64, omega: u64) -> LongTailProperties {
    assert!(x > 0.0 && x <= 1.0, "head fraction must lie in (0, 1]");
    let n = profile.len();
    let ranked = profile.ranked();
    let head = head_prefix_len(&ranked, profile.total(), x);
    let fewshot = profile
        .entries()
        .iter()
        .filter(|&&(_, c)| c <= omega)
        .count();
    LongTailProperties {
        head_length_pct: head as f64 / n as f64 * 100.0,
        fewshot_length_pct: fewshot as f64 / n as f64 * 100.0,
        imbalance: profile.max_count() as f64 / profile.min_count() as f64,
        head_fraction: x,
        fewshot_threshold: omega,
    }
}

/// Assign every class to head, tail or few-shot.
///
/// Head is the H%-defining prefix; few-shot is `{C_y ≤ ω}` minus the head
/// (the prefix rule wins when a class qualifies for both); tail is the rest.
pub fn assign_groups(profile: &ClassProfile, x: f64, omega: u64) -> GroupAssignment {
    assert!(x > 0.0 && x <= 1.0, "head fraction must lie in (0, 1]");
    let ranked = profile.ranked();
    let head_len = head_prefix_len(&ranked, profile.total(), x);
    let mut groups = BTreeMap::new();
    for (rank, &(id, count)) in ranked.iter().enumerate() {
        let group = if rank < head_len {
            Group::Head
        } else if count <= omega {
            Group::FewShot
        } else {
            Group::Tail
        };
        groups.insert(id, group);
    }
    GroupAssignment {
        groups,
        head_fraction: x,
        fewshot_threshold: omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(counts: &[u64]) -> ClassProfile {
        ClassProfile::new(
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as ClassId, c))
                .collect(),
        )
        .unwrap()
    }

    // Oracle: direct enumeration over all prefixes.
    fn enumerate_head_len(counts: &[u64], x: f64) -> usize {
        let mut ranked = counts.to_vec();
        ranked.sort_by(|a, b| b.cmp(a));
        let total: u64 = ranked.iter().sum();
        for k in 1..=ranked.len() {
            let mass: u64 = ranked[..k].iter().sum();
            if mass as f64 >= x * total as f64 {
                return k;
            }
        }
        ranked.len()
    }

    #[test]
    fn worked_example() {
        let p = profile(&[50, 30, 10, 5, 3, 2]);
        let props = compute_properties(&p, 0.5, 20);
        assert_eq!(enumerate_head_len(&[50, 30, 10, 5, 3, 2], 0.5), 1);
        assert!((props.head_length_pct - 100.0 / 6.0).abs() < 1e-12);
        assert!((props.fewshot_length_pct - 400.0 / 6.0).abs() < 1e-12);
        assert_eq!(props.imbalance, 25.0);
    }

    #[test]
    fn worked_example_groups() {
        let p = profile(&[50, 30, 10, 5, 3, 2]);
        let groups = assign_groups(&p, 0.5, 20);
        assert_eq!(groups.group(0), Some(Group::Head));
        assert_eq!(groups.group(1), Some(Group::Tail));
        for id in 2..6 {
            assert_eq!(groups.group(id), Some(Group::FewShot), "class {id}");
        }
    }

    #[test]
    fn uniform_profile() {
        let p = profile(&[10, 10, 10, 10]);
        let props = compute_properties(&p, 0.5, 20);
        assert_eq!(props.head_length_pct, 50.0);
        assert_eq!(props.fewshot_length_pct, 100.0);
        assert_eq!(props.imbalance, 1.0);
    }

    #[test]
    fn single_class_is_head_even_when_few_shot_sized() {
        let p = profile(&[3]);
        let groups = assign_groups(&p, 0.5, 20);
        assert_eq!(groups.group(0), Some(Group::Head));
        let props = compute_properties(&p, 0.5, 20);
        assert_eq!(props.head_length_pct, 100.0);
    }

    #[test]
    fn omega_below_min_count_gives_no_few_shot() {
        let p = profile(&[10, 10, 10]);
        let groups = assign_groups(&p, 0.5, 0);
        assert!(groups.classes_in(Group::FewShot).is_empty());
        let props = compute_properties(&p, 0.5, 0);
        assert_eq!(props.fewshot_length_pct, 0.0);
    }

    #[test]
    fn ties_broken_by_ascending_id() {
        // Classes 1 and 2 tie; class 1 must enter the head first.
        let p = ClassProfile::new(vec![(2, 10), (1, 10), (0, 5)]).unwrap();
        let groups = assign_groups(&p, 0.4, 0);
        assert_eq!(groups.group(1), Some(Group::Head));
        assert_eq!(groups.group(2), Some(Group::Tail));
    }

    #[test]
    fn empty_profile_rejected() {
        assert!(matches!(
            ClassProfile::new(vec![]).unwrap_err(),
            Error::EmptyProfile
        ));
    }

    #[test]
    fn zero_count_rejected() {
        assert!(ClassProfile::new(vec![(0, 0)]).is_err());
    }

    #[test]
    fn duplicate_id_rejected() {
        assert!(ClassProfile::new(vec![(0, 1), (0, 2)]).is_err());
    }

    #[test]
    fn groups_partition_all_classes() {
        let p = profile(&[100, 40, 22, 21, 20, 7, 3, 1]);
        let groups = assign_groups(&p, 0.5, 20);
        let mut seen = 0;
        for &(id, count) in p.entries() {
            let g = groups.group(id).expect("every class grouped");
            if g == Group::FewShot {
                assert!(count <= 20);
            }
            seen += 1;
        }
        assert_eq!(seen, groups.len());
    }

    #[test]
    fn csv_roundtrip() {
        let p = profile(&[50, 30, 10]);
        let mut buf = Vec::new();
        p.to_csv_writer(&mut buf).unwrap();
        let parsed = ClassProfile::from_csv_reader(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(parsed, p);
    }

    #[test]
    fn csv_error_reports_line() {
        let input = "class_id,count\n0,5\nbogus\n";
        let err = ClassProfile::from_csv_reader(std::io::Cursor::new(input)).unwrap_err();
        match err {
            Error::ProfileCsv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
