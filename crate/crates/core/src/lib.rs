//! Measures whether word embeddings encode linguistic relations as
//! consistent vector offsets.
//!
//! The crate provides the 3CosAdd analogy test (with and without input-word
//! exclusion) and algebraic decompositions of its score, the offset
//! concentration score (OCS), the pairing consistency score (PCS), randomized
//! baselines with no pairing consistency, and synthetic embedding geometries
//! with known ground truth.
//!
//! Core math is generic over the storage scalar ([`Scalar`], implemented for
//! `f32` and `f64`); the aliases below fix the common choices.

pub mod analogy;
pub mod baselines;
pub mod bats;
pub mod embed_io;
pub mod error;
pub mod linalg;
pub mod offsets;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Table with 32-bit storage, matching both on-disk formats.
pub type Table = embed_io::EmbeddingTable<f32>;
/// Table with 64-bit storage.
pub type Table64 = embed_io::EmbeddingTable<f64>;
pub type Resolved = bats::ResolvedRelation<f32>;
pub type Resolved64 = bats::ResolvedRelation<f64>;
pub type Baseline = baselines::BaselineInstance<f32>;
