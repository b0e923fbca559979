//! Similarity-weighted reconstruction with a contribution-weighted residual.

use super::mask::{exclusion_mask_over_pool, FewShotExclusion};
use super::{Batch, ContributionTable, FeatureBank};
use crate::autodiff::{affine_combine, concat_rows, cosine_similarity, masked_row_softmax, matmul, Var};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reconstructed features and the rows that had no eligible contributors.
pub struct Reconstruction {
    /// `B×D`; row `i` is `c(y_i)·(W Z_pool)_i + (1 − c(y_i))·Z_i`, or exactly
    /// `Z_i` when nothing could contribute.
    pub features: Var,
    pub rows_without_contributors: Vec<usize>,
}

/// Reconstruct every batch sample from the candidate pool (batch plus bank).
///
/// Cosine similarities between batch rows and pool rows are masked (no self,
/// no few-shot contributors under the default rule), row-softmaxed into
/// weights, and blended with the original features through the frozen
/// per-class contribution. Labels are untouched: a reconstruction keeps the
/// class of the sample it replaces.
pub fn reconstruct(
    batch: &Batch,
    table: &ContributionTable,
    omega: u64,
    exclusion: FewShotExclusion,
    similarity_grad: bool,
    bank: Option<&FeatureBank>,
) -> Result<Reconstruction> {
    let b = batch.len();
    let bank_features = bank.and_then(FeatureBank::features_matrix);
    if b < 2 && bank_features.is_none() {
        return Err(Error::BatchTooSmall { got: b });
    }

    let (pool, pool_counts) = match bank_features {
        Some(features) => {
            if features.cols() != batch.features.cols() {
                return Err(Error::DimensionMismatch {
                    op: "reconstruction pool".into(),
                    lhs_rows: batch.features.rows(),
                    lhs_cols: batch.features.cols(),
                    rhs_rows: features.rows(),
                    rhs_cols: features.cols(),
                });
            }
            let mut counts = batch.counts.clone();
            counts.extend(bank.expect("checked above").counts());
            (
                concat_rows(&batch.features, &Var::constant(features))?,
                counts,
            )
        }
        None => (batch.features.clone(), batch.counts.clone()),
    };

    let similarity = cosine_similarity(&batch.features, &pool)?;
    let similarity = if similarity_grad {
        similarity
    } else {
        similarity.detach()
    };
    let mask = exclusion_mask_over_pool(&batch.counts, &pool_counts, omega, exclusion, true);
    let softmax = masked_row_softmax(&similarity, &mask)?;
    let weighted = matmul(&softmax.weights, &pool)?;

    let mut contributions = Vec::with_capacity(b);
    for (i, &class) in batch.class_ids.iter().enumerate() {
        let c = if softmax.rows_without_contributors.contains(&i) {
            0.0
        } else {
            table.contribution(class)?
        };
        contributions.push(c);
    }
    let weights = Matrix::column(&contributions)?;
    let features = affine_combine(&weighted, &batch.features, &weights)?;

    Ok(Reconstruction {
        features,
        rows_without_contributors: softmax.rows_without_contributors,
    })
}
