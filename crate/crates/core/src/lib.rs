//! Cross-lingual discrepancy detection over topic-aligned corpora.
//!
//! Numeric kernels (filter scoring, embeddings, k-means, retrieval) are generic over
//! [`Scalar`]; the aliases below fix the precision.

// `!(x > 0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod eval;
pub mod index;
pub mod llm;
pub mod matrix;
pub mod pltm;
pub mod scalar;

pub use scalar::Scalar;

pub type MatrixF32 = matrix::Matrix<f32>;
pub type MatrixF64 = matrix::Matrix<f64>;
pub type TopicIndexF32 = index::TopicIndex<f32>;
pub type TopicIndexF64 = index::TopicIndex<f64>;
pub type FilterScoreF64 = corpus::FilterScore<f64>;
