//! Topic extraction toolkit built around formal concept analysis.
//!
//! The crate implements a full pipeline from raw documents to term topics:
//!
//! 1. [`corpus`]: document ingestion, minimal text cleaning, external
//!    lemma/POS annotations, and corpus statistics.
//! 2. [`terms`]: disambiguated term retrieval (HTTP service or offline
//!    fixture), coherence filtering, and the document×term frequency matrix.
//! 3. [`binarize`]: frequency thresholding strategies that turn the matrix
//!    into a binary formal context.
//! 4. [`fca`]: derivation operators, closure, and exhaustive formal-concept
//!    enumeration over bitset contexts.
//! 5. [`cluster`]: concept-based term similarity, feature standardization,
//!    Ward hierarchical clustering, and flat cluster extraction.
//! 6. [`validity`]: cluster-structure and internal-validity metrics plus the
//!    strategy×β×k sweep runner.
//! 7. [`llm`]: a three-prompt batched topic protocol against any
//!    chat-completion endpoint, with a deterministic replay client.
//!
//! Numeric code is generic over the scalar type through the [`Scalar`] trait;
//! every generic type defaults to `f64`, which is what the CLI uses.

pub mod binarize;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod fca;
pub mod llm;
pub mod terms;
pub mod validity;

mod scalar;
#[cfg(test)]
mod testutil;

pub use crate::error::{Error, Result};
pub use crate::scalar::Scalar;

/// Default scalar precision used by the CLI and the bundled fixtures.
pub type Precision = f64;
