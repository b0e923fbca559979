//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Var`] is a handle to a node in a dynamically built computation graph.
//! Forward values are computed eagerly; calling [`Var::backward`] on a scalar
//! output walks the graph once in reverse topological order and accumulates
//! gradients into every node that requires them.
//!
//! Graphs are intended to be built, differentiated and dropped within a
//! single training step. Values may be shared read-only across threads, but a
//! graph is owned by one thread at a time.

mod gradcheck;
mod mlp;
mod ops;
mod optim;

pub use gradcheck::check_gradients;
pub use mlp::{Dense, Mlp};
pub use ops::{
    add, add_row_broadcast, affine_combine, concat_rows, cosine_similarity, masked_row_softmax,
    matmul, relu, row_cosine_similarity, row_normalize, scale, soft_label_cross_entropy, sum_all,
    transpose, weighted_sum, MaskedSoftmax,
};
pub use optim::{Optimizer, OptimizerKind};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use std::cell::RefCell;
use std::collections::HashSet;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(0);

/// Given the node's output gradient, produce one gradient per parent.
type BackwardFn = Box<dyn Fn(&Matrix) -> Vec<Matrix>>;

struct Node {
    id: u64,
    value: Matrix,
    grad: Option<Matrix>,
    requires_grad: bool,
    parents: Vec<Var>,
    backward: Option<BackwardFn>,
}

/// Handle to a node in the computation graph.
#[derive(Clone)]
pub struct Var {
    node: Rc<RefCell<Node>>,
}

impl std::fmt::Debug for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = self.node.borrow();
        write!(
            f,
            "Var(id={}, {}x{}, requires_grad={})",
            n.id,
            n.value.rows(),
            n.value.cols(),
            n.requires_grad
        )
    }
}

impl Var {
    fn new_leaf(value: Matrix, requires_grad: bool) -> Var {
        Var {
            node: Rc::new(RefCell::new(Node {
                id: NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed),
                value,
                grad: None,
                requires_grad,
                parents: Vec::new(),
                backward: None,
            })),
        }
    }

    /// Trainable leaf: gradients are accumulated here during backward.
    pub fn parameter(value: Matrix) -> Var {
        Var::new_leaf(value, true)
    }

    /// Non-trainable leaf; backward never descends into it.
    pub fn constant(value: Matrix) -> Var {
        Var::new_leaf(value, false)
    }

    /// New op node. The backward closure is dropped when no parent requires
    /// gradients, so constant subgraphs cost nothing at backward time.
    pub(crate) fn from_op(value: Matrix, parents: Vec<Var>, backward: BackwardFn) -> Var {
        let requires_grad = parents.iter().any(Var::requires_grad);
        Var {
            node: Rc::new(RefCell::new(Node {
                id: NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed),
                value,
                grad: None,
                requires_grad,
                parents,
                backward: if requires_grad { Some(backward) } else { None },
            })),
        }
    }

    pub fn value(&self) -> Matrix {
        self.node.borrow().value.clone()
    }

    /// Run `f` against the node's value without cloning it.
    pub fn with_value<R>(&self, f: impl FnOnce(&Matrix) -> R) -> R {
        f(&self.node.borrow().value)
    }

    pub fn rows(&self) -> usize {
        self.node.borrow().value.rows()
    }

    pub fn cols(&self) -> usize {
        self.node.borrow().value.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.node.borrow().value.shape()
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self) -> f64 {
        let n = self.node.borrow();
        debug_assert_eq!(n.value.shape(), (1, 1));
        n.value.get(0, 0)
    }

    pub fn requires_grad(&self) -> bool {
        self.node.borrow().requires_grad
    }

    pub fn grad(&self) -> Option<Matrix> {
        self.node.borrow().grad.clone()
    }

    pub fn zero_grad(&self) {
        self.node.borrow_mut().grad = None;
    }

    /// Detached copy of the value: a constant leaf cut off from this graph.
    pub fn detach(&self) -> Var {
        Var::constant(self.value())
    }

    /// Overwrite the value of a leaf (used by optimizers between steps).
    pub fn set_value(&self, value: Matrix) {
        let mut n = self.node.borrow_mut();
        debug_assert_eq!(n.value.shape(), value.shape());
        n.value = value;
    }

    fn id(&self) -> u64 {
        self.node.borrow().id
    }

    fn accumulate_grad(&self, contribution: Matrix) {
        let mut n = self.node.borrow_mut();
        debug_assert_eq!(n.value.shape(), contribution.shape());
        match n.grad.as_mut() {
            Some(g) => g.add_assign(&contribution),
            None => n.grad = Some(contribution),
        }
    }

    /// Reverse pass from a scalar output. Visits each reachable node exactly
    /// once in reverse topological order.
    pub fn backward(&self) -> Result<()> {
        if self.shape() != (1, 1) {
            return Err(Error::DimensionMismatch {
                op: "backward (output must be scalar)".into(),
                lhs_rows: self.rows(),
                lhs_cols: self.cols(),
                rhs_rows: 1,
                rhs_cols: 1,
            });
        }

        let order = self.topological_order();
        self.node.borrow_mut().grad = Some(Matrix::new(1, 1, vec![1.0])?);

        for var in order.iter().rev() {
            let (grad, parents) = {
                let n = var.node.borrow();
                if !n.requires_grad || n.backward.is_none() {
                    continue;
                }
                let grad = match &n.grad {
                    Some(g) => g.clone(),
                    None => continue,
                };
                (grad, n.parents.clone())
            };
            let contributions = {
                let n = var.node.borrow();
                let backward = n.backward.as_ref().expect("checked above");
                backward(&grad)
            };
            debug_assert_eq!(contributions.len(), parents.len());
            for (parent, contribution) in parents.iter().zip(contributions) {
                if parent.requires_grad() {
                    parent.accumulate_grad(contribution);
                }
            }
        }
        Ok(())
    }

    /// Parents-before-children order via iterative DFS.
    fn topological_order(&self) -> Vec<Var> {
        enum Frame {
            Enter(Var),
            Exit(Var),
        }
        let mut order = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack = vec![Frame::Enter(self.clone())];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(var) => {
                    if !visited.insert(var.id()) {
                        continue;
                    }
                    let parents = var.node.borrow().parents.clone();
                    stack.push(Frame::Exit(var));
                    for p in parents {
                        stack.push(Frame::Enter(p));
                    }
                }
                Frame::Exit(var) => order.push(var),
            }
        }
        order
    }
}
