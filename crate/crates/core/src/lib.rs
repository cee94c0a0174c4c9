//! Word puzzle generation from topic dictionaries.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`corpus`] turns raw documents into a sparse word-by-document matrix.
//! 2. [`topics`] induces a topic dictionary from that matrix (LSA, collapsed
//!    Gibbs LDA, or online sparse dictionary learning) and keeps the `k` most
//!    significant words of each topic.
//! 3. [`consistency`] scores each candidate word set by the weakest edge of the
//!    maximum spanning tree of its ESA relatedness graph ([`esa`]) and keeps the
//!    sets that clear a threshold.
//! 4. [`puzzles`] mixes consistent sets with weakly related words to produce
//!    odd-one-out, choose-the-related-word and separate-the-topics puzzles.
//!
//! [`eval`] tabulates consistent-set yield over a threshold grid and
//! [`synthetic`] generates planted-topic corpora with known ground truth.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod consistency;
pub mod corpus;
pub mod error;
pub mod esa;
pub mod eval;
pub mod puzzles;
pub mod synthetic;
pub mod topics;

mod persist;
mod stopwords;

pub use error::{Error, Result};
