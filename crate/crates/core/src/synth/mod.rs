//! Seeded multilingual grounded corpora.
//!
//! Each image carries `m` of `d_c` latent concepts; its features are a fixed
//! orthonormal projection of the weighted concept indicator plus Gaussian
//! noise. Captions name a subset of the image's concepts using a
//! per-language lexicon whose surface forms never overlap across languages.

mod config;
mod oracle;
mod world;

pub use config::{Regime, SynthConfig};
pub use oracle::oracle_recall_bound;
pub use world::{generate, generate_with_world, Lexicon, WorldModel};
