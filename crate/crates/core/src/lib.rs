//! Latent concept analysis for code models.
//!
//! The pipeline runs in batch stages that communicate through plain files:
//!
//! 1. [`corpus`] loads source snippets and splits them into parser tokens,
//!    each tagged with its syntax-tree node kind.
//! 2. [`activation_io`] reads and writes the per-token activation matrices
//!    and attribution scores produced by an external model runner.
//! 3. [`discovery`] filters frequent token types, clusters the activations
//!    with K-Means and prunes oversized clusters.
//! 4. [`alignment`] measures lexical patterns and syntactic alignment and
//!    coverage of the discovered clusters.
//! 5. [`annotate`] asks an LLM to label clusters and computes annotator
//!    agreement.
//! 6. [`perturb`] applies semantic-preserving source transformations and
//!    [`robustness`] measures how much the clustering moves under them.
//! 7. [`attribution`] maps salient tokens of a prediction onto clusters and
//!    builds explanation prompts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation_io;
pub mod alignment;
pub mod annotate;
pub mod attribution;
pub mod corpus;
pub mod discovery;
pub mod perturb;
pub mod report;
pub mod robustness;
pub mod stub;

mod instance;

pub use instance::InstanceId;
