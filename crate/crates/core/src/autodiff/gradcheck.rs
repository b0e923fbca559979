//! Central finite-difference gradient checking.

use super::Var;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Entries whose analytic and numeric gradients are both below this magnitude
/// are treated as matching zeros; central differences cannot resolve below
/// their own roundoff noise.
const ZERO_FLOOR: f64 = 1e-7;

/// Compare the analytic gradient of a scalar-valued graph against central
/// finite differences, entry by entry, and return the worst relative error.
///
/// `build` must construct the graph afresh from the given leaves; it is
/// re-invoked at every perturbed point. Inputs should sit a margin away from
/// kinks (ReLU zeros, mask boundaries) relative to `eps`.
pub fn check_gradients<F>(build: F, points: &[Matrix], eps: f64) -> Result<f64>
where
    F: Fn(&[Var]) -> Result<Var>,
{
    let leaves: Vec<Var> = points.iter().cloned().map(Var::parameter).collect();
    let output = build(&leaves)?;
    if output.shape() != (1, 1) {
        return Err(Error::DimensionMismatch {
            op: "check_gradients (build must return a scalar)".into(),
            lhs_rows: output.rows(),
            lhs_cols: output.cols(),
            rhs_rows: 1,
            rhs_cols: 1,
        });
    }
    output.backward()?;
    let analytic: Vec<Matrix> = leaves
        .iter()
        .map(|leaf| {
            leaf.grad()
                .unwrap_or_else(|| Matrix::zeros(leaf.rows(), leaf.cols()))
        })
        .collect();

    let eval = |pts: &[Matrix]| -> Result<f64> {
        let leaves: Vec<Var> = pts.iter().cloned().map(Var::parameter).collect();
        Ok(build(&leaves)?.scalar())
    };

    let mut worst = 0.0f64;
    for (pi, point) in points.iter().enumerate() {
        for e in 0..point.len() {
            let base = point.data()[e];
            let mut plus = points.to_vec();
            plus[pi].data_mut()[e] = base + eps;
            let mut minus = points.to_vec();
            minus[pi].data_mut()[e] = base - eps;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * eps);
            let exact = analytic[pi].data()[e];
            let denom = exact.abs().max(numeric.abs());
            if denom < ZERO_FLOOR {
                continue;
            }
            worst = worst.max((exact - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
