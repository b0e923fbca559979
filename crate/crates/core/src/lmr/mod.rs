//! Mixed reconstruction for long-tail training batches.
//!
//! Samples from rare classes are replaced, in feature space, by a blend of
//! themselves and a similarity-weighted combination of eligible batch (and
//! feature-bank) samples, where "how much blending" is a frozen per-class
//! contribution derived from training counts. A stochastic pairwise mix of
//! features and labels follows. The whole operator is differentiable with
//! respect to the batch features and is only used during training.

mod bank;
mod contribution;
mod mask;
mod mix;
mod reconstruct;

pub use bank::{BankEntry, FeatureBank};
pub use contribution::{class_weights, default_epsilon, ContributionEntry, ContributionTable};
pub use mask::{exclusion_mask, exclusion_mask_over_pool, FewShotExclusion};
pub use mix::{mix_plan, MixPlan};
pub use reconstruct::{reconstruct, Reconstruction};

use crate::autodiff::{matmul, Var};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::ClassId;

/// One training batch as seen by the operator.
pub struct Batch {
    /// `B×D` features, typically the encoder output.
    pub features: Var,
    /// `B×K` labels; rows sum to 1.
    pub labels: Matrix,
    pub class_ids: Vec<ClassId>,
    /// Training count of each sample's class.
    pub counts: Vec<u64>,
}

impl Batch {
    pub fn new(features: Var, labels: Matrix, class_ids: Vec<ClassId>, counts: Vec<u64>) -> Result<Self> {
        let b = features.rows();
        if labels.rows() != b || class_ids.len() != b || counts.len() != b {
            return Err(Error::DimensionMismatch {
                op: "batch assembly".into(),
                lhs_rows: b,
                lhs_cols: features.cols(),
                rhs_rows: labels.rows(),
                rhs_cols: labels.cols(),
            });
        }
        for i in 0..b {
            let sum: f64 = labels.row(i).iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidLabel {
                    row: i,
                    detail: format!("sums to {sum}, expected 1 within 1e-6"),
                });
            }
        }
        Ok(Batch {
            features,
            labels,
            class_ids,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }
}

/// Knobs of the operator; defaults follow the reference setting for
/// feature-level datasets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmrOptions {
    /// Few-shot threshold ω for the exclusion mask.
    pub omega: u64,
    pub exclusion: FewShotExclusion,
    /// Probability that a sample passes through unmixed (α_i = 1).
    pub identity_mix_prob: f64,
    /// Differentiate through the similarity matrix (on) or treat the
    /// reconstruction weights as constants of the features (off).
    pub similarity_grad: bool,
}

impl Default for LmrOptions {
    fn default() -> Self {
        LmrOptions {
            omega: 20,
            exclusion: FewShotExclusion::Contributors,
            identity_mix_prob: 0.5,
            similarity_grad: true,
        }
    }
}

/// Output of [`mixed_reconstruction`].
pub struct MixedBatch {
    /// `B×D` mixed reconstructed features (differentiable w.r.t. the batch).
    pub features: Var,
    /// `B×K` mixed labels; rows sum to 1.
    pub labels: Matrix,
    pub plan: MixPlan,
    /// Rows whose candidate pool was entirely masked and that therefore fell
    /// back to their own features.
    pub rows_without_contributors: Vec<usize>,
}

/// The full operator: reconstruct, then pairwise-mix features and labels.
/// Afterwards the batch's feature values (detached) are pushed to the bank.
pub fn mixed_reconstruction(
    batch: &Batch,
    table: &ContributionTable,
    options: &LmrOptions,
    rng: &mut Rng,
    mut bank: Option<&mut FeatureBank>,
) -> Result<MixedBatch> {
    let reconstruction = reconstruct(
        batch,
        table,
        options.omega,
        options.exclusion,
        options.similarity_grad,
        bank.as_deref(),
    )?;
    let plan = mix_plan(batch.len(), options.identity_mix_prob, rng)?;
    let mixing = plan.matrix();
    let features = matmul(&Var::constant(mixing.clone()), &reconstruction.features)?;
    let labels = mixing.matmul(&batch.labels)?;

    if let Some(bank) = bank.as_deref_mut() {
        bank.push_batch(batch)?;
    }

    Ok(MixedBatch {
        features,
        labels,
        plan,
        rows_without_contributors: reconstruction.rows_without_contributors,
    })
}

/// Deterministic variant used by tests and by anything that needs to replay
/// an exact plan: no RNG, no bank push.
pub fn mixed_reconstruction_with_plan(
    batch: &Batch,
    table: &ContributionTable,
    options: &LmrOptions,
    plan: &MixPlan,
    bank: Option<&FeatureBank>,
) -> Result<MixedBatch> {
    if plan.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            op: "mixed_reconstruction_with_plan".into(),
            lhs_rows: plan.len(),
            lhs_cols: 1,
            rhs_rows: batch.len(),
            rhs_cols: 1,
        });
    }
    let reconstruction = reconstruct(
        batch,
        table,
        options.omega,
        options.exclusion,
        options.similarity_grad,
        bank,
    )?;
    let mixing = plan.matrix();
    let features = matmul(&Var::constant(mixing.clone()), &reconstruction.features)?;
    let labels = mixing.matmul(&batch.labels)?;
    Ok(MixedBatch {
        features,
        labels,
        plan: plan.clone(),
        rows_without_contributors: reconstruction.rows_without_contributors,
    })
}
