//! Exclusion mask for reconstruction.

use crate::matrix::Matrix;

/// Which index the few-shot test applies to.
///
/// `Contributors` masks column `j` when the contributing sample's class has
/// at most ω training samples: few-shot samples are already oversampled and
/// should not be building blocks for others. `Targets` is the literal
/// row-indexed variant, which instead disables reconstruction *of* few-shot
/// rows; kept selectable for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FewShotExclusion {
    Contributors,
    Targets,
}

/// `B×B` mask over a batch: `E_ij = 0` when `i = j` or the few-shot rule
/// fires, else 1.
pub fn exclusion_mask(counts: &[u64], omega: u64, rule: FewShotExclusion) -> Matrix {
    exclusion_mask_over_pool(counts, counts, omega, rule, true)
}

/// `B×P` mask of a batch against a candidate pool.
///
/// When `pool_prefix_is_batch` is true the first `B` pool columns are the
/// batch itself and the diagonal is masked; bank entries beyond come from
/// earlier iterations and are never "self". Under the `Targets` rule a
/// few-shot row masks all of its columns.
pub fn exclusion_mask_over_pool(
    batch_counts: &[u64],
    pool_counts: &[u64],
    omega: u64,
    rule: FewShotExclusion,
    pool_prefix_is_batch: bool,
) -> Matrix {
    let b = batch_counts.len();
    let p = pool_counts.len();
    let mut mask = Matrix::zeros(b, p);
    for i in 0..b {
        for j in 0..p {
            let self_pair = pool_prefix_is_batch && i == j && j < b;
            let few_shot = match rule {
                FewShotExclusion::Contributors => pool_counts[j] <= omega,
                FewShotExclusion::Targets => batch_counts[i] <= omega,
            };
            if !(self_pair || few_shot) {
                mask.set(i, j, 1.0);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    // Oracle: apply the rule by hand on counts [10, 100, 100], ω = 20. The
    // few-shot sample sits in column 0, so that column is dead along with
    // the diagonal.
    #[test]
    fn contributor_rule_hand_example() {
        let mask = exclusion_mask(&[10, 100, 100], 20, FewShotExclusion::Contributors);
        let expected = [
            [0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mask.get(i, j), expected[i][j], "({i}, {j})");
            }
        }
    }

    #[test]
    fn omega_zero_masks_only_diagonal() {
        let mask = exclusion_mask(&[3, 8, 1], 0, FewShotExclusion::Contributors);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mask.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn all_few_shot_batch_is_fully_masked() {
        let mask = exclusion_mask(&[5, 3, 2], 20, FewShotExclusion::Contributors);
        assert!(mask.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn target_rule_masks_few_shot_rows() {
        let mask = exclusion_mask(&[10, 100, 100], 20, FewShotExclusion::Targets);
        // Row 0 is few-shot: fully masked. Other rows only mask self.
        assert!(mask.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(mask.row(1), &[1.0, 0.0, 1.0]);
        assert_eq!(mask.row(2), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn bank_columns_have_no_self_exclusion() {
        // Batch of 2, pool of 2 batch + 2 bank entries.
        let mask = exclusion_mask_over_pool(
            &[100, 100],
            &[100, 100, 100, 5],
            20,
            FewShotExclusion::Contributors,
            true,
        );
        assert_eq!(mask.row(0), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(mask.row(1), &[1.0, 0.0, 1.0, 0.0]);
    }
}
