//! Recall@K retrieval evaluation in both directions, per language, with
//! aggregation across seeds.

mod evaluate;
mod recall;
mod report;

pub use evaluate::{evaluate_embeddings, evaluate_model};
pub use recall::{ranks, recall_at_k, recall_at_ks};
pub use report::{
    aggregate_seeds, comparison_table, Direction, ReportEntry, RetrievalProtocol, RetrievalReport,
};
