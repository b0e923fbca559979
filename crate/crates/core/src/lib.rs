//! Long-tail recognition toolkit.
//!
//! The crate is organised around the life cycle of a long-tail experiment:
//!
//! * [`tailprops`] measures a class-count profile: head length (H%), few-shot
//!   length (F%) and imbalance (I), plus the head/tail/few-shot partition.
//! * [`curate`] generates Pareto-shaped long-tail profiles, fits them under
//!   constraints (fixed imbalance and total size) and resamples dataset
//!   manifests into long-tail train/val/test splits.
//! * [`autodiff`] is a small dense-matrix reverse-mode engine, sufficient to
//!   train an MLP encoder and linear classifier through the batch operators
//!   below, with a finite-difference gradient checker.
//! * [`lmr`] implements mixed reconstruction: frozen per-class contributions,
//!   exclusion-masked similarity reconstruction with a residual connection,
//!   stochastic pairwise label mixing, and an optional feature bank.
//! * [`train`] runs single- and two-stage schedules (CE, cRT, Mixup, LMR)
//!   with instance-balanced and class-balanced samplers, and evaluates
//!   group-wise accuracy.
//!
//! All randomness flows from a single 64-bit seed through the documented
//! generator in [`rng`].

pub mod autodiff;
pub mod curate;
pub mod error;
pub mod features;
pub mod lmr;
pub mod manifest;
pub mod matrix;
pub mod rng;
pub mod tailprops;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Class identifier used across profiles, manifests and reports.
pub type ClassId = u32;
