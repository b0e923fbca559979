//! Differentiable operations.
//!
//! Each op computes its value eagerly and registers a closure that maps the
//! output gradient to per-parent gradients. Closures capture value clones, so
//! a finished graph never re-borrows its inputs during backward.

use super::Var;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn dim_error(op: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        op: op.into(),
        lhs_rows: a.0,
        lhs_cols: a.1,
        rhs_rows: b.0,
        rhs_cols: b.1,
    }
}

/// Matrix product `a × b`.
pub fn matmul(a: &Var, b: &Var) -> Result<Var> {
    let (av, bv) = (a.value(), b.value());
    if av.cols() != bv.rows() {
        return Err(dim_error("matmul", av.shape(), bv.shape()));
    }
    let value = av.matmul(&bv)?;
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let da = g.matmul(&bv.transpose()).expect("shape-checked");
        let db = av.transpose().matmul(g).expect("shape-checked");
        vec![da, db]
    };
    Ok(Var::from_op(
        value,
        vec![a.clone(), b.clone()],
        Box::new(backward),
    ))
}

pub fn transpose(a: &Var) -> Var {
    let value = a.with_value(|m| m.transpose());
    Var::from_op(
        value,
        vec![a.clone()],
        Box::new(|g: &Matrix| vec![g.transpose()]),
    )
}

pub fn add(a: &Var, b: &Var) -> Result<Var> {
    let value = a.with_value(|av| b.with_value(|bv| av.add(bv)))?;
    Ok(Var::from_op(
        value,
        vec![a.clone(), b.clone()],
        Box::new(|g: &Matrix| vec![g.clone(), g.clone()]),
    ))
}

pub fn scale(a: &Var, factor: f64) -> Result<Var> {
    let value = a.with_value(|m| m.scale(factor))?;
    Ok(Var::from_op(
        value,
        vec![a.clone()],
        Box::new(move |g: &Matrix| vec![g.scale(factor).expect("finite factor")]),
    ))
}

/// Broadcast a `1×n` bias over the rows of an `m×n` input.
pub fn add_row_broadcast(x: &Var, bias: &Var) -> Result<Var> {
    let xv = x.value();
    let bv = bias.value();
    if bv.rows() != 1 || bv.cols() != xv.cols() {
        return Err(dim_error("add_row_broadcast", xv.shape(), bv.shape()));
    }
    let (m, n) = xv.shape();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            data.push(xv.get(i, j) + bv.get(0, j));
        }
    }
    let value = Matrix::from_op(m, n, data, "add_row_broadcast")?;
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let mut db = Matrix::zeros(1, n);
        for i in 0..m {
            for j in 0..n {
                db.data_mut()[j] += g.get(i, j);
            }
        }
        vec![g.clone(), db]
    };
    Ok(Var::from_op(
        value,
        vec![x.clone(), bias.clone()],
        Box::new(backward),
    ))
}

pub fn relu(x: &Var) -> Result<Var> {
    let xv = x.value();
    let (m, n) = xv.shape();
    let active: Vec<bool> = xv.data().iter().map(|&v| v > 0.0).collect();
    let data: Vec<f64> = xv.data().iter().map(|&v| v.max(0.0)).collect();
    let value = Matrix::from_op(m, n, data, "relu")?;
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let mut dx = Matrix::zeros(m, n);
        for (out, (gv, act)) in dx.data_mut().iter_mut().zip(g.data().iter().zip(&active)) {
            if *act {
                *out = *gv;
            }
        }
        vec![dx]
    };
    Ok(Var::from_op(value, vec![x.clone()], Box::new(backward)))
}

/// Stack `a` on top of `b` (both with the same column count).
pub fn concat_rows(a: &Var, b: &Var) -> Result<Var> {
    let (av, bv) = (a.value(), b.value());
    if av.cols() != bv.cols() {
        return Err(dim_error("concat_rows", av.shape(), bv.shape()));
    }
    let (ma, mb, n) = (av.rows(), bv.rows(), av.cols());
    let mut data = Vec::with_capacity((ma + mb) * n);
    data.extend_from_slice(av.data());
    data.extend_from_slice(bv.data());
    let value = Matrix::from_op(ma + mb, n, data, "concat_rows")?;
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let da = Matrix::new(ma, n, g.data()[..ma * n].to_vec()).expect("finite slice");
        let db = Matrix::new(mb, n, g.data()[ma * n..].to_vec()).expect("finite slice");
        vec![da, db]
    };
    Ok(Var::from_op(
        value,
        vec![a.clone(), b.clone()],
        Box::new(backward),
    ))
}

/// Scale every row to unit Euclidean norm. Rows with zero norm are rejected.
pub fn row_normalize(z: &Var) -> Result<Var> {
    let zv = z.value();
    let (m, n) = zv.shape();
    let mut norms = Vec::with_capacity(m);
    for i in 0..m {
        let norm = zv.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(Error::DegenerateRow { row: i });
        }
        norms.push(norm);
    }
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            data.push(zv.get(i, j) / norms[i]);
        }
    }
    let value = Matrix::from_op(m, n, data, "row_normalize")?;
    let normalized = value.clone();
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        // d z_i = (g_i − (g_i · r_i) r_i) / ‖z_i‖
        let mut dz = Matrix::zeros(m, n);
        for i in 0..m {
            let gr: f64 = g
                .row(i)
                .iter()
                .zip(normalized.row(i))
                .map(|(a, b)| a * b)
                .sum();
            for j in 0..n {
                dz.set(i, j, (g.get(i, j) - gr * normalized.get(i, j)) / norms[i]);
            }
        }
        vec![dz]
    };
    Ok(Var::from_op(value, vec![z.clone()], Box::new(backward)))
}

/// Pairwise cosine similarity between the rows of `a` and the rows of `b`:
/// `S_ij = ⟨a_i, b_j⟩ / (‖a_i‖ ‖b_j‖)`.
pub fn cosine_similarity(a: &Var, b: &Var) -> Result<Var> {
    let na = row_normalize(a)?;
    let nb = row_normalize(b)?;
    matmul(&na, &transpose(&nb))
}

/// Cosine similarity of every row of `z` with every other row (`B×B`,
/// symmetric, unit diagonal).
pub fn row_cosine_similarity(z: &Var) -> Result<Var> {
    let n = row_normalize(z)?;
    matmul(&n, &transpose(&n))
}

/// Result of [`masked_row_softmax`]: the weights plus the rows whose mask was
/// all zero. Those rows are returned as exact zeros rather than an error; the
/// caller decides the fallback.
pub struct MaskedSoftmax {
    pub weights: Var,
    pub rows_without_contributors: Vec<usize>,
}

/// Row softmax restricted to positions where `mask` is 1.
///
/// Unmasked entries of each row sum to 1; masked positions are exactly zero.
/// Stabilised by subtracting the per-row maximum over unmasked entries.
pub fn masked_row_softmax(s: &Var, mask: &Matrix) -> Result<MaskedSoftmax> {
    let sv = s.value();
    if sv.shape() != mask.shape() {
        return Err(dim_error("masked_row_softmax", sv.shape(), mask.shape()));
    }
    let (m, n) = sv.shape();
    for i in 0..m {
        for j in 0..n {
            let e = mask.get(i, j);
            if e != 0.0 && e != 1.0 {
                return Err(Error::InvalidMask {
                    row: i,
                    col: j,
                    value: e,
                });
            }
        }
    }

    let mut data = vec![0.0; m * n];
    let mut empty_rows = Vec::new();
    for i in 0..m {
        let unmasked: Vec<usize> = (0..n).filter(|&j| mask.get(i, j) == 1.0).collect();
        if unmasked.is_empty() {
            empty_rows.push(i);
            continue;
        }
        let max = unmasked
            .iter()
            .map(|&j| sv.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &j in &unmasked {
            let e = (sv.get(i, j) - max).exp();
            data[i * n + j] = e;
            sum += e;
        }
        for &j in &unmasked {
            data[i * n + j] /= sum;
        }
    }
    let value = Matrix::from_op(m, n, data, "masked_row_softmax")?;
    let weights = value.clone();
    let mask_copy = mask.clone();
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let mut ds = Matrix::zeros(m, n);
        for i in 0..m {
            let mut dot = 0.0;
            for j in 0..n {
                dot += g.get(i, j) * weights.get(i, j);
            }
            for j in 0..n {
                if mask_copy.get(i, j) == 1.0 {
                    ds.set(i, j, weights.get(i, j) * (g.get(i, j) - dot));
                }
            }
        }
        vec![ds]
    };
    Ok(MaskedSoftmax {
        weights: Var::from_op(value, vec![s.clone()], Box::new(backward)),
        rows_without_contributors: empty_rows,
    })
}

/// Mean over the batch of `−Σ_k y_k log softmax(logits)_k` with soft labels.
///
/// Label rows must be non-negative and sum to 1 within 1e-6.
pub fn soft_label_cross_entropy(logits: &Var, labels: &Matrix) -> Result<Var> {
    let lv = logits.value();
    if lv.shape() != labels.shape() {
        return Err(dim_error("soft_label_cross_entropy", lv.shape(), labels.shape()));
    }
    let (m, k) = lv.shape();
    for i in 0..m {
        let row = labels.row(i);
        if let Some(neg) = row.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidLabel {
                row: i,
                detail: format!("negative entry {neg}"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidLabel {
                row: i,
                detail: format!("sums to {sum}, expected 1 within 1e-6"),
            });
        }
    }

    let mut probs = Matrix::zeros(m, k);
    let mut total = 0.0;
    for i in 0..m {
        let row = lv.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for j in 0..k {
            let e = (row[j] - max).exp();
            probs.set(i, j, e);
            sum += e;
        }
        let lse = max + sum.ln();
        let mut row_loss = 0.0;
        for j in 0..k {
            probs.set(i, j, probs.get(i, j) / sum);
            row_loss += labels.get(i, j) * (lse - row[j]);
        }
        total += row_loss;
    }
    let value = Matrix::from_op(1, 1, vec![total / m as f64], "soft_label_cross_entropy")?;
    let labels_copy = labels.clone();
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let scale = g.get(0, 0) / m as f64;
        let mut dl = Matrix::zeros(m, k);
        for i in 0..m {
            for j in 0..k {
                dl.set(i, j, (probs.get(i, j) - labels_copy.get(i, j)) * scale);
            }
        }
        vec![dl]
    };
    Ok(Var::from_op(value, vec![logits.clone()], Box::new(backward)))
}

/// Row-wise blend `out_i = w_i · a_i + (1 − w_i) · b_i` with constant weights
/// `w` (a column with entries in `[0, 1]`).
pub fn affine_combine(a: &Var, b: &Var, w: &Matrix) -> Result<Var> {
    let (av, bv) = (a.value(), b.value());
    if av.shape() != bv.shape() {
        return Err(dim_error("affine_combine", av.shape(), bv.shape()));
    }
    if w.rows() != av.rows() || w.cols() != 1 {
        return Err(dim_error("affine_combine weights", w.shape(), (av.rows(), 1)));
    }
    for i in 0..w.rows() {
        let v = w.get(i, 0);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidWeight { row: i, value: v });
        }
    }
    let (m, n) = av.shape();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        let wi = w.get(i, 0);
        for j in 0..n {
            data.push(wi * av.get(i, j) + (1.0 - wi) * bv.get(i, j));
        }
    }
    let value = Matrix::from_op(m, n, data, "affine_combine")?;
    let weights = w.clone();
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        let mut da = Matrix::zeros(m, n);
        let mut db = Matrix::zeros(m, n);
        for i in 0..m {
            let wi = weights.get(i, 0);
            for j in 0..n {
                da.set(i, j, wi * g.get(i, j));
                db.set(i, j, (1.0 - wi) * g.get(i, j));
            }
        }
        vec![da, db]
    };
    Ok(Var::from_op(
        value,
        vec![a.clone(), b.clone()],
        Box::new(backward),
    ))
}

/// Sum of all entries, as a scalar node.
pub fn sum_all(a: &Var) -> Result<Var> {
    let av = a.value();
    let (m, n) = av.shape();
    let value = Matrix::from_op(1, 1, vec![av.data().iter().sum()], "sum_all")?;
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        Matrix::filled(m, n, g.get(0, 0))
            .map(|m| vec![m])
            .expect("finite gradient")
    };
    Ok(Var::from_op(value, vec![a.clone()], Box::new(backward)))
}

/// `Σ_ij a_ij · w_ij` with constant weights; handy for scalarising an op
/// under gradient check without symmetric cancellation.
pub fn weighted_sum(a: &Var, w: &Matrix) -> Result<Var> {
    let av = a.value();
    if av.shape() != w.shape() {
        return Err(dim_error("weighted_sum", av.shape(), w.shape()));
    }
    let total: f64 = av.data().iter().zip(w.data()).map(|(x, c)| x * c).sum();
    let value = Matrix::from_op(1, 1, vec![total], "weighted_sum")?;
    let weights = w.clone();
    let backward = move |g: &Matrix| -> Vec<Matrix> {
        vec![weights.scale(g.get(0, 0)).expect("finite gradient")]
    };
    Ok(Var::from_op(value, vec![a.clone()], Box::new(backward)))
}
