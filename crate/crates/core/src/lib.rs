//! Coded beam training for RIS-assisted links.
//!
//! The crate covers the full simulation chain: array responses and candidate
//! angle grids ([`array_model`]), LoS channel realizations with AWGN power
//! measurements ([`channel`]), systematic `[I | Q]` block codes with the
//! dimension-reduced RIS encoder ([`block_code`]), beam pattern matrices and
//! constant-modulus codeword synthesis ([`codebook`]), the exhaustive,
//! hierarchical and coded training protocols ([`training_sim`]) and the
//! Monte-Carlo sweep runner behind the `cbt` CLI ([`experiments`]).

pub mod array_model;
pub mod block_code;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod seed;
pub mod training_sim;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
