//! Linear layers and a small rectifier MLP.

use super::{add_row_broadcast, matmul, relu, Var};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Fully connected layer `x W + b` with `W: in×out`, `b: 1×out`.
pub struct Dense {
    pub weight: Var,
    pub bias: Var,
}

impl Dense {
    /// Glorot-uniform weights, zero bias. Consumes `in × out` uniform draws.
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Dense {
        let bound = (6.0 / (input + output) as f64).sqrt();
        let data: Vec<f64> = (0..input * output)
            .map(|_| (rng.uniform() * 2.0 - 1.0) * bound)
            .collect();
        Dense {
            weight: Var::parameter(Matrix::new(input, output, data).expect("finite init")),
            bias: Var::parameter(Matrix::zeros(1, output)),
        }
    }

    pub fn from_values(weight: Matrix, bias: Matrix) -> Dense {
        Dense {
            weight: Var::parameter(weight),
            bias: Var::parameter(bias),
        }
    }

    pub fn forward(&self, x: &Var) -> Result<Var> {
        add_row_broadcast(&matmul(x, &self.weight)?, &self.bias)
    }

    pub fn params(&self) -> Vec<Var> {
        vec![self.weight.clone(), self.bias.clone()]
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Rectifier MLP: ReLU after every layer except the last. With no layers it
/// is the identity; with one layer it is a plain linear map.
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `dims` chains input to output, e.g. `[32, 64, 64]` builds
    /// `32→64 (relu) →64`. Fewer than two entries yields the identity.
    pub fn init(dims: &[usize], rng: &mut Rng) -> Mlp {
        let layers = dims
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn forward(&self, x: &Var) -> Result<Var> {
        let mut h = x.clone();
        let last = self.layers.len().saturating_sub(1);
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if i < last {
                h = relu(&h)?;
            }
        }
        Ok(h)
    }

    pub fn params(&self) -> Vec<Var> {
        self.layers.iter().flat_map(Dense::params).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        self.layers
            .last()
            .map(Dense::output_dim)
            .unwrap_or(input_dim)
    }
}
