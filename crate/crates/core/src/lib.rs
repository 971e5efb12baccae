//! Axis ordering for ICA-transformed word embeddings.
//!
//! The pipeline runs load → center → whiten → FastICA → orient, builds one
//! embedding per axis from its top-k words, and orders the axes by a closed
//! tour that maximizes the cosine similarity of neighbouring axes. Consecutive
//! axes of the tour can then be merged into fewer dimensions with
//! skewness-derived weights.
//!
//! Every module is usable on its own; [`pipeline`] wires them together the way
//! the command line tool does.

pub mod continuity;
pub mod dimred;
pub mod embed_io;
mod error;
pub mod eval;
pub mod ica;
pub mod linalg;
pub mod pipeline;
pub mod redact;
pub mod stats;
pub mod tica;
pub mod tour;
pub mod viz;
pub mod whiten;

pub use embed_io::{EmbeddingMatrix, Vocabulary};
pub use error::{Error, Result};
