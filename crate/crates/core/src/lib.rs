//! Multilingual visual-semantic sentence embeddings.
//!
//! Captions in any number of languages and fixed image features are mapped
//! into one ℓ2-normalized space. Training alternates between a
//! caption–image ranking task and a caption–caption ranking task over
//! captions of the same image in different languages.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod model;
pub mod numerics;
pub mod objective;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
