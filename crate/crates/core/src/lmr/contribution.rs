//! Frozen per-class contribution function.
//!
//! Class weights are `C̃_y = 1 / log(C_y·d + ε)`; contributions min-max
//! normalise the weights and scale by `l`, so the largest class contributes 0
//! and the smallest contributes `l`. The choice of logarithm base cancels in
//! the normalisation, so natural log is used throughout. The table is built
//! once from the training profile and never changes during training.

use crate::error::{Error, Result};
use crate::tailprops::ClassProfile;
use crate::ClassId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default ε: large enough that `C_y·d + ε > 1` holds for every class,
/// including min-count-1 profiles where the paper's constant would otherwise
/// vanish into the decay term.
pub fn default_epsilon(min_count: u64, d: f64) -> f64 {
    (1.1 - min_count as f64 * d).max(1.0)
}

/// Per-class weights `C̃_y = 1 / ln(C_y·d + ε)`.
///
/// Requires `C_y·d + ε > 1` for every class so the weight is finite and
/// positive; violations report the ε that would be needed.
pub fn class_weights(profile: &ClassProfile, d: f64, epsilon: f64) -> Result<Vec<(ClassId, f64)>> {
    if d <= 0.0 {
        return Err(Error::Config(format!("decay d must be positive, got {d}")));
    }
    let min_count = profile.min_count();
    let worst = min_count as f64 * d + epsilon;
    if worst <= 1.0 {
        return Err(Error::EpsilonTooSmall {
            epsilon,
            d,
            count: min_count,
            value: worst,
            required: 1.0 - min_count as f64 * d,
        });
    }
    Ok(profile
        .entries()
        .iter()
        .map(|&(id, count)| (id, 1.0 / (count as f64 * d + epsilon).ln()))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionEntry {
    pub class_id: ClassId,
    pub count: u64,
    pub c: f64,
}

/// Frozen map from class to contribution `c(y) ∈ [0, l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionTable {
    entries: Vec<ContributionEntry>,
    #[serde(skip)]
    by_class: BTreeMap<ClassId, f64>,
    pub d: f64,
    pub epsilon: f64,
    pub l: f64,
}

impl ContributionTable {
    /// Build the table from a training profile. A balanced profile (all
    /// counts equal) makes the min-max normalisation degenerate; it resolves
    /// to `c ≡ 0`, i.e. reconstruction disabled.
    pub fn from_profile(
        profile: &ClassProfile,
        d: f64,
        epsilon: Option<f64>,
        l: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::Config(format!("l must lie in [0, 1], got {l}")));
        }
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(profile.min_count(), d));
        let weights = class_weights(profile, d, epsilon)?;
        let min = weights.iter().map(|&(_, w)| w).fold(f64::INFINITY, f64::min);
        let max = weights
            .iter()
            .map(|&(_, w)| w)
            .fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let counts = profile.count_map();
        let entries: Vec<ContributionEntry> = weights
            .into_iter()
            .map(|(class_id, w)| ContributionEntry {
                class_id,
                count: counts[&class_id],
                c: if span > 0.0 { (w - min) / span * l } else { 0.0 },
            })
            .collect();
        let by_class = entries.iter().map(|e| (e.class_id, e.c)).collect();
        Ok(ContributionTable {
            entries,
            by_class,
            d,
            epsilon,
            l,
        })
    }

    pub fn contribution(&self, class: ClassId) -> Result<f64> {
        self.by_class
            .get(&class)
            .copied()
            .ok_or(Error::UnknownClass(class))
    }

    pub fn entries(&self) -> &[ContributionEntry] {
        &self.entries
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.entries)?)
    }
}

// Rebuild the lookup map after deserialisation.
impl ContributionTable {
    pub fn from_json(json: &str) -> Result<Self> {
        let mut table: ContributionTable = serde_json::from_str(json)?;
        table.by_class = table.entries.iter().map(|e| (e.class_id, e.c)).collect();
        Ok(table)
    }
}
