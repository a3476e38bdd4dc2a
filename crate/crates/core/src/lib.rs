//! Sparse, non-negative object embeddings learned from triplet odd-one-out
//! behavior, plus the tooling to compare two such embeddings.
//!
//! The pipeline runs roughly in this order:
//!
//! 1. [`data`] loads feature matrices, triplet files and dimension labels.
//! 2. [`triplet_sim`] simulates odd-one-out choices from a feature matrix.
//! 3. [`vice`] fits a variational embedding with a spike-and-slab prior and
//!    prunes it to the dimensions that are reliably non-zero.
//! 4. [`reliability`] scores runs across seeds and picks the most reproducible.
//! 5. [`rsa`], [`relevance`] and [`interp`] compare and explain embeddings.

pub mod choice;
pub mod data;
pub mod error;
pub mod interp;
pub mod io_util;
pub mod relevance;
pub mod reliability;
pub mod rng;
pub mod rsa;
pub mod stats;
pub mod synthetic;
pub mod triplet_sim;
pub mod vice;

pub use data::{
    DimensionLabel, DimensionLabelTable, FeatureMatrix, PointEmbedding, Provenance, TripletDataset,
    TripletRecord,
};
pub use error::{Error, ErrorKind, Result};
