//! Corpus model, shared vocabulary, caption-pair construction, seeded
//! sampling, and on-disk formats.

mod corpus;
mod io;
mod pairs;
mod sampling;
mod vocab;

pub use corpus::{Caption, CaptionRecord, Corpus, Image, Split};
pub use io::{
    load_corpus, read_captions, read_features, save_corpus, write_atomic, CorpusPaths,
    FEATURE_MAGIC,
};
pub use pairs::{generate_c2c_pairs, CaptionPair, CaptionPairSet};
pub use sampling::{
    sample_one_caption_per_language, split_half_overlap_disjoint, training_halves, HalfMode,
};
pub use vocab::{
    build_vocabulary, jaccard, jaccard_matrix, vocab_union_stats, UnionStats, Vocabulary,
    DEFAULT_MIN_COUNT, UNK,
};
