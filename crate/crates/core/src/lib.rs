//! Triplet-network embeddings for continuous regression targets.
//!
//! The crate learns a low-dimensional representation of per-item feature
//! vectors by training a single dense ReLU layer with a triplet hinge loss.
//! Triplets are mined from continuous labels with a gap rule: an item is a
//! positive for an anchor when their labels differ by at most `delta_p`, a
//! negative when they differ by at least `delta_n`, and discarded otherwise.
//!
//! Alongside the triplet network the crate carries the pieces needed to
//! benchmark it: PCA, Gaussian random projection and an autoencoder as
//! competing reducers, epsilon-SVR and least-squares gradient boosting as
//! downstream regressors, and a k-fold R² harness.
//!
//! Everything here is pure computation over in-memory matrices. The crate is
//! `no_std` (it needs `alloc`) when built without the default `std` feature;
//! file formats, persistence and the command-line tool live in the
//! `tripletreg` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod matrix;
pub mod nn;
pub mod reducers;
pub mod regressors;
pub mod rng;
pub mod synthetic;
pub mod triplets;

pub use data::{AnnotationTable, FeatureMatrix, FoldAssignment, Standardizer, Target};
pub use error::{Error, Result};
pub use matrix::Matrix;
