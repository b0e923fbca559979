//! Stochastic pairwise mixing plan.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Per-sample mixing weights α and partner indices β (with `β_i ≠ i`).
///
/// The induced `B×B` matrix has at most two non-zeros per row, `α_i` on the
/// diagonal and `1−α_i` at the partner, so every row sums to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MixPlan {
    pub alpha: Vec<f64>,
    pub partner: Vec<usize>,
}

impl MixPlan {
    pub fn new(alpha: Vec<f64>, partner: Vec<usize>) -> Result<Self> {
        let b = alpha.len();
        if b < 2 {
            return Err(Error::BatchTooSmall { got: b });
        }
        if partner.len() != b {
            return Err(Error::DimensionMismatch {
                op: "mix plan".into(),
                lhs_rows: b,
                lhs_cols: 1,
                rhs_rows: partner.len(),
                rhs_cols: 1,
            });
        }
        for (i, (&a, &p)) in alpha.iter().zip(&partner).enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidWeight { row: i, value: a });
            }
            if p == i || p >= b {
                return Err(Error::Config(format!(
                    "mix partner of sample {i} is {p} (must differ from {i} and stay below {b})"
                )));
            }
        }
        Ok(MixPlan { alpha, partner })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Plan that leaves every sample unmixed (α ≡ 1); partners are assigned
    /// but carry zero weight.
    pub fn identity(b: usize) -> Result<Self> {
        MixPlan::new(vec![1.0; b], (0..b).map(|i| (i + 1) % b).collect())
    }

    /// Assemble the mixing matrix `M`.
    pub fn matrix(&self) -> Matrix {
        let b = self.len();
        let mut m = Matrix::zeros(b, b);
        for i in 0..b {
            m.set(i, i, self.alpha[i]);
            let residual = 1.0 - self.alpha[i];
            if residual != 0.0 {
                m.set(i, self.partner[i], residual);
            }
        }
        m
    }
}

/// Draw a mixing plan: with probability `identity_prob` a sample keeps
/// α_i = 1, otherwise α_i is uniform on [0, 1); partners are uniform over the
/// other samples. Draw order per sample: identity coin, then (only when the
/// coin fails) the α draw, then the partner.
pub fn mix_plan(b: usize, identity_prob: f64, rng: &mut Rng) -> Result<MixPlan> {
    if b < 2 {
        return Err(Error::BatchTooSmall { got: b });
    }
    let mut alpha = Vec::with_capacity(b);
    let mut partner = Vec::with_capacity(b);
    for i in 0..b {
        let a = if rng.uniform() < identity_prob {
            1.0
        } else {
            rng.uniform()
        };
        alpha.push(a);
        let mut p = rng.gen_range(b as u64 - 1) as usize;
        if p >= i {
            p += 1;
        }
        partner.push(p);
    }
    MixPlan::new(alpha, partner)
}
