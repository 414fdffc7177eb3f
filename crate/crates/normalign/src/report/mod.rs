//! Report emission: per-feature radar charts, the aggregate results table,
//! and the plain-text divergence summary.

mod divergence;
mod radar;

pub use divergence::divergence_report;
pub use radar::{radar_chart, RadarSeries, RadarSpec};

use thiserror::Error;

use crate::feature::FeatureRegistry;
use crate::metrics::{results_to_csv, AlignmentResult};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("a radar chart needs at least 3 axes, got {0}")]
    TooFewAxes(usize),
    #[error("series {name:?} has {got} values for {expected} axes")]
    SeriesLength {
        name: String,
        got: usize,
        expected: usize,
    },
}

/// The aggregate comma-separated results table: one row per
/// (feature, model), ordered by (dataset, feature, model). Cells match the
/// metrics serialization, so parsing the table back is lossless.
pub fn results_table(results: &[AlignmentResult], registry: &FeatureRegistry) -> String {
    let mut sorted: Vec<&AlignmentResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        let key = |r: &AlignmentResult| {
            (
                registry.dataset_of(&r.feature),
                r.feature.clone(),
                r.model.clone(),
            )
        };
        key(a).cmp(&key(b))
    });
    results_to_csv(&sorted.into_iter().cloned().collect::<Vec<_>>())
}
