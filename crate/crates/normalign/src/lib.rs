//! Evaluation harness measuring how closely LLM word-feature ratings track
//! human psycholinguistic norms.
//!
//! The pipeline asks a language model to rate words on Likert scales using
//! the same instructions given to human raters, reads the model's first-token
//! probabilities, turns them into two per-word rating estimates, and reports
//! four correlation coefficients per (feature, model) pair along with radar
//! charts and a divergence summary.

pub mod client;
pub mod dataset;
pub mod estimator;
pub mod feature;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod scale;

pub use client::{
    run_batch, Backend, BackendConfig, CachingBackend, LiveClient, MockBackend, QueryCache,
    QueryError, QueryRecord, ReplayBackend, TokenDistribution,
};
pub use dataset::{NormDataset, NormDatasetBuilder, WordRating};
pub use estimator::{
    argmax_estimate, extract_scale_distribution, weighted_estimate, RatingEstimate,
    ScaleDistribution,
};
pub use feature::{
    feature_registry, render_prompt, render_prompt_with, Dataset, FeatureRegistry, NormFeature,
    QuoteStyle,
};
pub use ingest::{load_glasgow, load_lancaster, sample_words, ColumnMapping, IngestReport};
pub use metrics::{
    alignment_matrix, pearson, round_series, spearman, AlignmentResult, MetricOptions,
    PairedSeries,
};
pub use report::{divergence_report, radar_chart, results_table, RadarSeries, RadarSpec};
pub use scale::{RatingScale, ScaleError};
