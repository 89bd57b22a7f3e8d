//! Train single-layer LSTM language models on linearized constituency
//! corpora, record their internal gate vectors, and probe those vectors for
//! quantization, nesting-depth counters, and part-of-speech structure.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod io;
pub mod lstm;
pub mod probe;
pub mod train;

pub use error::{Error, Result};
