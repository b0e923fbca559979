//! FIFO feature bank extending the reconstruction candidate pool.
//!
//! Entries are detached values from earlier iterations: no gradient ever
//! flows into them. A bank of capacity `P − B` makes the candidate pool for a
//! batch of `B` samples `P` wide.

use super::Batch;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ClassId;
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq)]
pub struct BankEntry {
    pub feature: Vec<f64>,
    pub label: Vec<f64>,
    pub class_id: ClassId,
    pub count: u64,
}

#[derive(Clone, Debug)]
pub struct FeatureBank {
    capacity: usize,
    dim: Option<usize>,
    entries: VecDeque<BankEntry>,
}

impl FeatureBank {
    pub fn new(capacity: usize) -> Self {
        FeatureBank {
            capacity,
            dim: None,
            entries: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Push the batch's feature values (detached), evicting oldest first.
    pub fn push_batch(&mut self, batch: &Batch) -> Result<()> {
        if self.capacity == 0 {
            return Ok(());
        }
        let features = batch.features.value();
        let dim = features.cols();
        match self.dim {
            None => self.dim = Some(dim),
            Some(existing) if existing != dim => {
                return Err(Error::DimensionMismatch {
                    op: "feature bank push".into(),
                    lhs_rows: 1,
                    lhs_cols: existing,
                    rhs_rows: 1,
                    rhs_cols: dim,
                });
            }
            Some(_) => {}
        }
        for i in 0..batch.len() {
            if self.entries.len() == self.capacity {
                self.entries.pop_front();
            }
            self.entries.push_back(BankEntry {
                feature: features.row(i).to_vec(),
                label: batch.labels.row(i).to_vec(),
                class_id: batch.class_ids[i],
                count: batch.counts[i],
            });
        }
        Ok(())
    }

    /// Stacked bank features, oldest first; `None` when empty.
    pub fn features_matrix(&self) -> Option<Matrix> {
        if self.entries.is_empty() {
            return None;
        }
        let dim = self.dim.expect("non-empty bank has a dimension");
        let mut data = Vec::with_capacity(self.entries.len() * dim);
        for entry in &self.entries {
            data.extend_from_slice(&entry.feature);
        }
        Some(Matrix::new(self.entries.len(), dim, data).expect("bank holds finite values"))
    }

    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.count).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &BankEntry> {
        self.entries.iter()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }
}
