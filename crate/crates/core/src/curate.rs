//! Long-tail benchmark curation.
//!
//! Profiles are generated by evaluating the Pareto density with shape `α` on
//! a uniform rank grid: `raw_i = (1 + i / x0)^-(α+1)` with `x0` solved so the
//! last rank lands exactly on `min_count / max_count`. Counts are the raws
//! scaled to `max_count` and rounded, with both endpoints pinned exactly, so
//! the imbalance of a generated profile is exact and the curve is
//! deterministic — no sampling noise to explain away when validating against
//! published dataset properties.

use crate::error::{Deficit, Error, Result};
use crate::manifest::{DatasetManifest, SampleRecord, Split};
use crate::rng::{stream, Rng};
use crate::tailprops::{assign_groups, compute_properties, ClassProfile, GroupAssignment, LongTailProperties};
use crate::ClassId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Recipe for a deterministic Pareto-shaped profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoRecipe {
    pub num_classes: usize,
    /// Pareto shape α (> 0).
    pub alpha: f64,
    pub max_count: u64,
    pub min_count: u64,
    /// Seed carried along for downstream resampling; profile generation
    /// itself is deterministic.
    pub seed: u64,
}

impl ParetoRecipe {
    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::ProfileTooSmall {
                got: self.num_classes,
                required: 2,
            });
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config(format!(
                "pareto alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.min_count < 1 || self.max_count < self.min_count {
            return Err(Error::Config(format!(
                "need max_count >= min_count >= 1, got max {} min {}",
                self.max_count, self.min_count
            )));
        }
        Ok(())
    }
}

/// Generate a non-increasing class-count profile with exact endpoints.
///
/// Class ids are assigned in rank order: id 0 is the largest class.
pub fn pareto_profile(recipe: &ParetoRecipe) -> Result<ClassProfile> {
    recipe.validate()?;
    let n = recipe.num_classes;
    let (max, min) = (recipe.max_count as f64, recipe.min_count as f64);
    let ratio = max / min;
    let exponent = recipe.alpha + 1.0;

    let mut counts = Vec::with_capacity(n);
    if recipe.max_count == recipe.min_count {
        counts.resize(n, recipe.max_count);
    } else {
        let x0 = (n as f64 - 1.0) / (ratio.powf(1.0 / exponent) - 1.0);
        for i in 0..n {
            let raw = (1.0 + i as f64 / x0).powf(-exponent);
            counts.push((max * raw).round() as u64);
        }
        counts[0] = recipe.max_count;
        counts[n - 1] = recipe.min_count;
    }

    debug_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    ClassProfile::new(
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as ClassId, c))
            .collect(),
    )
}

/// Result of constraining a profile to a requested imbalance and total size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitOutcome {
    pub profile: ClassProfile,
    pub max_count: u64,
    pub min_count: u64,
    pub achieved_total: u64,
    pub properties: LongTailProperties,
}

fn profile_total(n: usize, alpha: f64, max_count: u64, imbalance: f64) -> Result<(u64, u64)> {
    let min_count = ((max_count as f64 / imbalance).round() as u64).max(1);
    let recipe = ParetoRecipe {
        num_classes: n,
        alpha,
        max_count,
        min_count: min_count.min(max_count),
        seed: 0,
    };
    Ok((pareto_profile(&recipe)?.total(), min_count.min(max_count)))
}

/// Find the profile of `n` classes with imbalance `imbalance` and shape
/// `alpha` whose total is nearest `total`, by bisecting on the maximum class
/// size with `min_count = round(max_count / imbalance)`.
pub fn fit_profile(n: usize, imbalance: f64, total: u64, alpha: f64) -> Result<FitOutcome> {
    if imbalance < 1.0 {
        return Err(Error::Config(format!(
            "imbalance must be >= 1, got {imbalance}"
        )));
    }
    // Smallest max_count that keeps min_count >= 1 without overshooting the
    // requested imbalance by more than rounding allows.
    let lo = (imbalance.ceil() as u64).max(2);
    let cap: u64 = 1 << 40;
    let (total_lo, _) = profile_total(n, alpha, lo, imbalance)?;
    let (total_cap, _) = profile_total(n, alpha, cap, imbalance)?;
    if total < total_lo || total > total_cap {
        return Err(Error::InfeasibleTotal {
            requested: total,
            n,
            imbalance,
            alpha,
            min_total: total_lo,
            max_total: total_cap,
        });
    }

    // First max_count whose total reaches the target; totals are monotone in
    // max_count up to rounding of min_count.
    let (mut lo_bound, mut hi_bound) = (lo, cap);
    while lo_bound < hi_bound {
        let mid = lo_bound + (hi_bound - lo_bound) / 2;
        let (t, _) = profile_total(n, alpha, mid, imbalance)?;
        if t < total {
            lo_bound = mid + 1;
        } else {
            hi_bound = mid;
        }
    }

    let mut best: Option<(u64, u64)> = None; // (max_count, achieved_total)
    for candidate in [lo_bound.saturating_sub(1), lo_bound] {
        if candidate < lo {
            continue;
        }
        let (t, _) = profile_total(n, alpha, candidate, imbalance)?;
        let better = match best {
            None => true,
            Some((_, bt)) => t.abs_diff(total) < bt.abs_diff(total),
        };
        if better {
            best = Some((candidate, t));
        }
    }
    let (max_count, achieved_total) = best.expect("bisection bracket is non-empty");
    let (_, min_count) = profile_total(n, alpha, max_count, imbalance)?;
    let profile = pareto_profile(&ParetoRecipe {
        num_classes: n,
        alpha,
        max_count,
        min_count,
        seed: 0,
    })?;
    let properties = compute_properties(&profile, 0.5, 20);
    Ok(FitOutcome {
        profile,
        max_count,
        min_count,
        achieved_total,
        properties,
    })
}

/// How to build the balanced val/test splits during resampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub val_per_class: u64,
    pub test_per_class: u64,
    /// Classes with fewer test-source samples than this are dropped before
    /// ranking.
    pub min_test_per_class: u64,
    /// Source split the val samples are drawn from.
    pub val_source: Split,
    /// Source split the test samples are drawn from.
    pub test_source: Split,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            val_per_class: 40,
            test_per_class: 15,
            min_test_per_class: 0,
            val_source: Split::Train,
            test_source: Split::Val,
        }
    }
}

/// Resample a source manifest onto a long-tail profile.
///
/// Classes are ranked by their original training-set size and receive the
/// profile counts in the same rank order, so the largest source class stays
/// the largest curated class. Per-class selection is uniform without
/// replacement from a seeded generator; candidates are ordered by sample id
/// before drawing so the result is independent of source record order.
pub fn resample_manifest(
    source: &DatasetManifest,
    profile: &ClassProfile,
    spec: &SplitSpec,
    seed: u64,
) -> Result<DatasetManifest> {
    source.validate()?;
    let train_counts = source.split_counts(Split::Train);
    let test_source_counts = source.split_counts(spec.test_source);

    // Drop rule, applied before ranking.
    let kept: Vec<ClassId> = source
        .classes
        .iter()
        .map(|c| c.id)
        .filter(|id| {
            test_source_counts.get(id).copied().unwrap_or(0) >= spec.min_test_per_class
        })
        .collect();
    if kept.len() != profile.len() {
        return Err(Error::InvalidManifest(format!(
            "profile has {} classes but {} source classes remain after the drop rule",
            profile.len(),
            kept.len()
        )));
    }

    // Source rank order: by original train count, ties by ascending id.
    let mut ranked_classes = kept.clone();
    ranked_classes.sort_by(|a, b| {
        let ca = train_counts.get(a).copied().unwrap_or(0);
        let cb = train_counts.get(b).copied().unwrap_or(0);
        cb.cmp(&ca).then(a.cmp(b))
    });
    let ranked_profile = profile.ranked();

    let mut target_train: BTreeMap<ClassId, u64> = BTreeMap::new();
    for (class, &(_, count)) in ranked_classes.iter().zip(&ranked_profile) {
        target_train.insert(*class, count);
    }

    // Per-class needs, grouped by the source split the samples come from.
    let mut needs: BTreeMap<ClassId, BTreeMap<Split, Vec<(Split, u64)>>> = BTreeMap::new();
    for &class in &kept {
        let entry = needs.entry(class).or_default();
        entry
            .entry(Split::Train)
            .or_default()
            .push((Split::Train, target_train[&class]));
        if spec.val_per_class > 0 {
            entry
                .entry(spec.val_source)
                .or_default()
                .push((Split::Val, spec.val_per_class));
        }
        if spec.test_per_class > 0 {
            entry
                .entry(spec.test_source)
                .or_default()
                .push((Split::Test, spec.test_per_class));
        }
    }

    // Candidate pools: per (class, source split), ordered by sample id.
    let mut pools: BTreeMap<(ClassId, Split), Vec<&SampleRecord>> = BTreeMap::new();
    for sample in &source.samples {
        pools
            .entry((sample.class, sample.split))
            .or_default()
            .push(sample);
    }
    for pool in pools.values_mut() {
        pool.sort_by(|a, b| a.id.cmp(&b.id));
    }

    // Availability check across every class before any drawing.
    let mut deficits = Vec::new();
    for (&class, by_split) in &needs {
        for (&source_split, requests) in by_split {
            let required: u64 = requests.iter().map(|&(_, n)| n).sum();
            let available = pools
                .get(&(class, source_split))
                .map(|p| p.len() as u64)
                .unwrap_or(0);
            if available < required {
                deficits.push(Deficit {
                    class_id: class,
                    split: source_split.as_str().into(),
                    required,
                    available,
                });
            }
        }
    }
    if !deficits.is_empty() {
        return Err(Error::SourceDeficit(deficits));
    }

    let mut rng = stream(seed, "curate.resample");
    let mut samples = Vec::new();
    for (&class, by_split) in &needs {
        for (&source_split, requests) in by_split {
            let pool = &pools[&(class, source_split)];
            let total_needed: u64 = requests.iter().map(|&(_, n)| n).sum();
            let drawn = rng.sample_without_replacement(pool, total_needed as usize);
            let mut cursor = 0usize;
            for &(target_split, count) in requests {
                for record in &drawn[cursor..cursor + count as usize] {
                    samples.push(SampleRecord {
                        id: record.id.clone(),
                        class,
                        split: target_split,
                        feature_file: record.feature_file.clone(),
                        row: record.row,
                    });
                }
                cursor += count as usize;
            }
        }
    }

    let classes = source
        .classes
        .iter()
        .filter(|c| kept.contains(&c.id))
        .cloned()
        .collect();
    let manifest = DatasetManifest { classes, samples };
    manifest.validate()?;
    Ok(manifest)
}

/// Profile with `extra` added to every class, alongside the group assignment
/// of the original profile (kept for before/after comparisons).
#[derive(Clone, Debug)]
pub struct AugmentedProfile {
    pub profile: ClassProfile,
    pub original_groups: GroupAssignment,
}

/// Add a fixed number of samples to every class, clamped to per-class source
/// caps when provided. A cap below the original count is a deficit.
pub fn add_samples_per_class(
    profile: &ClassProfile,
    extra: u64,
    caps: Option<&BTreeMap<ClassId, u64>>,
    head_fraction: f64,
    omega: u64,
) -> Result<AugmentedProfile> {
    let original_groups = assign_groups(profile, head_fraction, omega);
    let mut deficits = Vec::new();
    let mut entries = Vec::with_capacity(profile.len());
    for &(class, count) in profile.entries() {
        let target = count + extra;
        let capped = match caps.and_then(|c| c.get(&class)) {
            Some(&cap) if cap < count => {
                deficits.push(Deficit {
                    class_id: class,
                    split: Split::Train.as_str().into(),
                    required: count,
                    available: cap,
                });
                count
            }
            Some(&cap) => target.min(cap),
            None => target,
        };
        entries.push((class, capped));
    }
    if !deficits.is_empty() {
        return Err(Error::SourceDeficit(deficits));
    }
    Ok(AugmentedProfile {
        profile: ClassProfile::new(entries)?,
        original_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::ClassEntry;

    fn recipe(n: usize, alpha: f64, max: u64, min: u64) -> ParetoRecipe {
        ParetoRecipe {
            num_classes: n,
            alpha,
            max_count: max,
            min_count: min,
            seed: 0,
        }
    }

    #[test]
    fn endpoints_exact_and_non_increasing() {
        let profile = pareto_profile(&recipe(174, 6.0, 2500, 5)).unwrap();
        let counts: Vec<u64> = profile.entries().iter().map(|&(_, c)| c).collect();
        assert_eq!(counts[0], 2500);
        assert_eq!(counts[173], 5);
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn two_classes_forced_to_endpoints() {
        let profile = pareto_profile(&recipe(2, 6.0, 100, 7)).unwrap();
        let counts: Vec<u64> = profile.entries().iter().map(|&(_, c)| c).collect();
        assert_eq!(counts, vec![100, 7]);
    }

    #[test]
    fn too_few_classes_rejected() {
        let err = pareto_profile(&recipe(1, 6.0, 100, 5)).unwrap_err();
        assert!(matches!(err, Error::ProfileTooSmall { got: 1, .. }));
    }

    #[test]
    fn deterministic() {
        let a = pareto_profile(&recipe(50, 6.0, 300, 5)).unwrap();
        let b = pareto_profile(&recipe(50, 6.0, 300, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn published_ssv2_lt_properties() {
        let profile = pareto_profile(&recipe(174, 6.0, 2500, 5)).unwrap();
        let props = compute_properties(&profile, 0.5, 20);
        assert_eq!(props.imbalance, 500.0);
        assert!((props.head_length_pct - 9.0).abs() <= 3.0, "H {}", props.head_length_pct);
        assert!(
            (props.fewshot_length_pct - 32.0).abs() <= 6.0,
            "F {}",
            props.fewshot_length_pct
        );
        let total = profile.total() as f64;
        assert!((total - 50418.0).abs() <= 0.15 * 50418.0, "total {total}");
    }

    #[test]
    fn published_videolt_lt_properties() {
        let profile = pareto_profile(&recipe(772, 6.0, 550, 5)).unwrap();
        let props = compute_properties(&profile, 0.5, 20);
        assert_eq!(props.imbalance, 110.0);
        assert!((props.head_length_pct - 12.0).abs() <= 3.0, "H {}", props.head_length_pct);
        assert!(
            (props.fewshot_length_pct - 38.0).abs() <= 6.0,
            "F {}",
            props.fewshot_length_pct
        );
    }

    // Steepness sweep: with endpoints pinned, lowering alpha flattens the
    // early curve less and empties the middle more, so the head shortens and
    // the few-shot region grows.
    #[test]
    fn alpha_sweep_steepness_directions() {
        let mut prev_f = f64::INFINITY;
        let mut prev_h = 0.0;
        for alpha in [2.0, 4.0, 6.0, 8.0] {
            let profile = pareto_profile(&recipe(174, alpha, 2500, 5)).unwrap();
            let props = compute_properties(&profile, 0.5, 20);
            assert!(
                props.fewshot_length_pct <= prev_f,
                "F% should not grow with alpha: {} then {}",
                prev_f,
                props.fewshot_length_pct
            );
            assert!(
                props.head_length_pct >= prev_h,
                "H% should not shrink with alpha: {} then {}",
                prev_h,
                props.head_length_pct
            );
            prev_f = props.fewshot_length_pct;
            prev_h = props.head_length_pct;
        }
    }

    #[test]
    fn fit_reproduces_ssv2_max_count() {
        let fit = fit_profile(174, 500.0, 50418, 6.0).unwrap();
        assert!(
            (fit.max_count as f64 - 2500.0).abs() <= 250.0,
            "max {}",
            fit.max_count
        );
        let achieved = fit.profile.max_count() as f64 / fit.profile.min_count() as f64;
        assert_eq!(achieved, 500.0);
    }

    #[test]
    fn fit_balanced_two_class_case() {
        let fit = fit_profile(2, 1.0, 2000, 6.0).unwrap();
        let counts: Vec<u64> = fit.profile.entries().iter().map(|&(_, c)| c).collect();
        assert_eq!(counts, vec![1000, 1000]);
    }

    #[test]
    fn fit_infeasible_reports_range() {
        let err = fit_profile(10, 100.0, 3, 6.0).unwrap_err();
        match err {
            Error::InfeasibleTotal { min_total, max_total, .. } => {
                assert!(min_total > 3);
                assert!(max_total > min_total);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_sweep_head_grows_with_alpha() {
        let mut prev_h = 0.0;
        for alpha in [2.0, 4.0, 6.0, 8.0] {
            let fit = fit_profile(174, 500.0, 50418, alpha).unwrap();
            assert!(
                fit.properties.head_length_pct >= prev_h,
                "H% should not shrink with alpha"
            );
            prev_h = fit.properties.head_length_pct;
        }
    }

    fn synthetic_source(per_class_train: &[u64], val: u64, test: u64) -> DatasetManifest {
        let mut classes = Vec::new();
        let mut samples = Vec::new();
        for (id, &train) in per_class_train.iter().enumerate() {
            let id = id as ClassId;
            classes.push(ClassEntry {
                id,
                name: format!("class-{id}"),
            });
            let mut seq = 0;
            for (split, count) in [(Split::Train, train), (Split::Val, val), (Split::Test, test)] {
                for _ in 0..count {
                    samples.push(SampleRecord {
                        id: format!("c{id:04}_{seq:06}"),
                        class: id,
                        split,
                        feature_file: "src.fmx".into(),
                        row: 0,
                    });
                    seq += 1;
                }
            }
        }
        DatasetManifest { classes, samples }
    }

    #[test]
    fn resample_counts_and_rank_order() {
        let source = synthetic_source(&[100, 80, 60, 40], 30, 30);
        let profile = ClassProfile::new(vec![(0, 50), (1, 20), (2, 10), (3, 5)]).unwrap();
        let spec = SplitSpec {
            val_per_class: 4,
            test_per_class: 3,
            min_test_per_class: 0,
            val_source: Split::Val,
            test_source: Split::Test,
        };
        let out = resample_manifest(&source, &profile, &spec, 7).unwrap();
        let train = out.split_counts(Split::Train);
        assert_eq!(train[&0], 50);
        assert_eq!(train[&1], 20);
        assert_eq!(train[&2], 10);
        assert_eq!(train[&3], 5);
        assert_eq!(out.split_len(Split::Val), 16);
        assert_eq!(out.split_len(Split::Test), 12);
    }

    #[test]
    fn resample_is_seed_deterministic() {
        let source = synthetic_source(&[50, 40, 30], 10, 10);
        let profile = ClassProfile::new(vec![(0, 20), (1, 10), (2, 5)]).unwrap();
        let spec = SplitSpec {
            val_per_class: 2,
            test_per_class: 2,
            min_test_per_class: 0,
            val_source: Split::Val,
            test_source: Split::Test,
        };
        let a = resample_manifest(&source, &profile, &spec, 3).unwrap();
        let b = resample_manifest(&source, &profile, &spec, 3).unwrap();
        assert_eq!(a, b);

        let c = resample_manifest(&source, &profile, &spec, 4).unwrap();
        assert_eq!(c.split_counts(Split::Train), a.split_counts(Split::Train));
        let ids = |m: &DatasetManifest| -> Vec<String> {
            m.split_samples(Split::Train).map(|s| s.id.clone()).collect()
        };
        assert_ne!(ids(&a), ids(&c), "different seeds should pick different samples");
    }

    #[test]
    fn identity_resample_keeps_train_set() {
        let source = synthetic_source(&[30, 20, 10], 0, 5);
        let profile = ClassProfile::new(vec![(0, 30), (1, 20), (2, 10)]).unwrap();
        let spec = SplitSpec {
            val_per_class: 0,
            test_per_class: 0,
            min_test_per_class: 0,
            val_source: Split::Val,
            test_source: Split::Test,
        };
        let out = resample_manifest(&source, &profile, &spec, 11).unwrap();
        let mut got: Vec<String> = out.split_samples(Split::Train).map(|s| s.id.clone()).collect();
        let mut expected: Vec<String> =
            source.split_samples(Split::Train).map(|s| s.id.clone()).collect();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn resample_deficit_lists_classes() {
        let source = synthetic_source(&[10, 10], 1, 1);
        let profile = ClassProfile::new(vec![(0, 10), (1, 10)]).unwrap();
        let spec = SplitSpec {
            val_per_class: 5,
            test_per_class: 0,
            min_test_per_class: 0,
            val_source: Split::Val,
            test_source: Split::Test,
        };
        let err = resample_manifest(&source, &profile, &spec, 1).unwrap_err();
        match err {
            Error::SourceDeficit(list) => {
                assert_eq!(list.len(), 2);
                assert_eq!(list[0].split, "val");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resample_drop_rule_applies_before_ranking() {
        let source = synthetic_source(&[50, 40, 30], 5, 5);
        // Class 2 gets too few test-source samples: drop it.
        let source = {
            let mut m = source;
            m.samples.retain(|s| !(s.class == 2 && s.split == Split::Test));
            m
        };
        let profile = ClassProfile::new(vec![(0, 20), (1, 10)]).unwrap();
        let spec = SplitSpec {
            val_per_class: 1,
            test_per_class: 1,
            min_test_per_class: 2,
            val_source: Split::Val,
            test_source: Split::Test,
        };
        let out = resample_manifest(&source, &profile, &spec, 5).unwrap();
        assert_eq!(out.classes.len(), 2);
        assert!(out.classes.iter().all(|c| c.id != 2));
    }

    #[test]
    fn add_samples_identity_and_definition() {
        let profile = ClassProfile::new(vec![(0, 5), (1, 30)]).unwrap();
        let same = add_samples_per_class(&profile, 0, None, 0.5, 20).unwrap();
        assert_eq!(same.profile, profile);

        let plus = add_samples_per_class(&profile, 10, None, 0.5, 20).unwrap();
        let counts: Vec<u64> = plus.profile.entries().iter().map(|&(_, c)| c).collect();
        assert_eq!(counts, vec![15, 40]);
        // Original grouping is retained for comparison.
        assert_eq!(
            plus.original_groups.group(0),
            Some(crate::tailprops::Group::FewShot)
        );
    }

    #[test]
    fn add_twenty_clears_few_shot_counts() {
        let profile = pareto_profile(&recipe(30, 6.0, 500, 5)).unwrap();
        let plus = add_samples_per_class(&profile, 20, None, 0.5, 20).unwrap();
        assert!(plus.profile.entries().iter().all(|&(_, c)| c > 20));
    }

    #[test]
    fn add_samples_cap_violation_is_deficit() {
        let profile = ClassProfile::new(vec![(0, 10)]).unwrap();
        let caps: BTreeMap<ClassId, u64> = [(0, 8)].into_iter().collect();
        let err = add_samples_per_class(&profile, 5, Some(&caps), 0.5, 20).unwrap_err();
        assert!(matches!(err, Error::SourceDeficit(_)));
    }

    #[test]
    fn add_samples_clamps_to_cap() {
        let profile = ClassProfile::new(vec![(0, 10), (1, 4)]).unwrap();
        let caps: BTreeMap<ClassId, u64> = [(0, 12), (1, 100)].into_iter().collect();
        let out = add_samples_per_class(&profile, 5, Some(&caps), 0.5, 20).unwrap();
        let counts: Vec<u64> = out.profile.entries().iter().map(|&(_, c)| c).collect();
        assert_eq!(counts, vec![12, 9]);
    }
}
