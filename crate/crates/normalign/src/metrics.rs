//! The four alignment coefficients between human means and model estimates:
//! Pearson and Spearman, each on the original values and on both series
//! rounded to the nearest integer.
//!
//! Zero-variance series yield `None` ("undefined") rather than 0 or an
//! error: a rounded series can legitimately collapse to one value, and
//! reports must distinguish "no signal" from "no correlation".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scale::RatingScale;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 3 pairs, got {0}")]
    TooFewPairs(usize),
}

/// Index-aligned human and model values for one (feature, model) pair.
/// Pairs with a failed estimate are dropped before this point and counted
/// upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub words: Vec<String>,
    pub human: Vec<f64>,
    pub model: Vec<f64>,
}

impl PairedSeries {
    pub fn new(words: Vec<String>, human: Vec<f64>, model: Vec<f64>) -> Result<Self, MetricsError> {
        if words.len() != human.len() || human.len() != model.len() {
            return Err(MetricsError::LengthMismatch {
                left: human.len(),
                right: model.len(),
            });
        }
        Ok(Self {
            words,
            human,
            model,
        })
    }

    pub fn len(&self) -> usize {
        self.human.len()
    }

    pub fn is_empty(&self) -> bool {
        self.human.is_empty()
    }
}

/// Product-moment correlation; `None` when n < 2 or either series has zero
/// variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 || is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let mean_x = mean(x);
    let mean_y = mean(y);
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    let mut sum_yy = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sum_xy += dx * dy;
        sum_xx += dx * dx;
        sum_yy += dy * dy;
    }
    if sum_xx == 0.0 || sum_yy == 0.0 {
        return Ok(None);
    }
    let r = sum_xy / (sum_xx * sum_yy).sqrt();
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// Rank correlation: Pearson on rank variables, with tied values receiving
/// their average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Average ranks (1-based); ties share the mean of the ranks they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for k in i..j {
            ranks[order[k]] = rank;
        }
        i = j;
    }
    ranks
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Rounds each value to the nearest integer (halves away from zero) and
/// clamps the result to the scale.
pub fn round_series(values: &[f64], scale: RatingScale) -> Vec<i64> {
    values
        .iter()
        .map(|v| scale.clamp_f64(v.round()) as i64)
        .collect()
}

/// Which side(s) the integer rounding applies to for the rounded variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundingSide {
    #[default]
    Both,
    Human,
    Model,
}

/// Which per-word estimate feeds the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    #[default]
    Weighted,
    Argmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// |pearson_raw - spearman_raw| above this flags a divergence.
    pub divergence_threshold: f64,
    pub rounding: RoundingSide,
    pub estimate: EstimateKind,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            divergence_threshold: 0.15,
            rounding: RoundingSide::default(),
            estimate: EstimateKind::default(),
        }
    }
}

/// The four coefficients for one (feature, model) pair. `None` marks an
/// undefined coefficient (too few pairs or zero variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub feature: String,
    pub model: String,
    pub n_words: usize,
    pub pearson_raw: Option<f64>,
    pub pearson_rounded: Option<f64>,
    pub spearman_raw: Option<f64>,
    pub spearman_rounded: Option<f64>,
    pub divergence_flag: bool,
}

/// Computes all four coefficients and the divergence flag for one pair of
/// series.
pub fn alignment_matrix(
    feature: &str,
    model: &str,
    series: &PairedSeries,
    scale: RatingScale,
    options: &MetricOptions,
) -> Result<AlignmentResult, MetricsError> {
    let n = series.len();
    if n < 3 {
        return Err(MetricsError::TooFewPairs(n));
    }
    let pearson_raw = pearson(&series.human, &series.model)?;
    let spearman_raw = spearman(&series.human, &series.model)?;

    let as_f64 = |v: Vec<i64>| -> Vec<f64> { v.into_iter().map(|x| x as f64).collect() };
    let (human_rounded, model_rounded) = match options.rounding {
        RoundingSide::Both => (
            as_f64(round_series(&series.human, scale)),
            as_f64(round_series(&series.model, scale)),
        ),
        RoundingSide::Human => (
            as_f64(round_series(&series.human, scale)),
            series.model.clone(),
        ),
        RoundingSide::Model => (
            series.human.clone(),
            as_f64(round_series(&series.model, scale)),
        ),
    };
    let pearson_rounded = pearson(&human_rounded, &model_rounded)?;
    let spearman_rounded = spearman(&human_rounded, &model_rounded)?;

    let divergence_flag = match (pearson_raw, spearman_raw) {
        (Some(p), Some(s)) => (p - s).abs() > options.divergence_threshold,
        _ => false,
    };

    Ok(AlignmentResult {
        feature: feature.to_string(),
        model: model.to_string(),
        n_words: n,
        pearson_raw,
        pearson_rounded,
        spearman_raw,
        spearman_rounded,
        divergence_flag,
    })
}

const RESULTS_HEADER: &str =
    "feature,model,n,pearson_raw,pearson_rounded,spearman_raw,spearman_rounded,divergence";

/// Serializes results to the comma-separated table; undefined coefficients
/// become empty cells. Floats use the shortest round-trip representation so
/// parsing the table back is lossless.
pub fn results_to_csv(results: &[AlignmentResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            escape_csv(&r.feature),
            escape_csv(&r.model),
            r.n_words,
            cell(r.pearson_raw),
            cell(r.pearson_rounded),
            cell(r.spearman_raw),
            cell(r.spearman_rounded),
            r.divergence_flag,
        ));
    }
    out
}

fn escape_csv(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

/// Parses a results table produced by [`results_to_csv`].
pub fn results_from_csv(text: &str) -> Result<Vec<AlignmentResult>, TableError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut results = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |idx: usize| -> Result<&str, TableError> {
            record.get(idx).ok_or_else(|| TableError::BadRow {
                row,
                reason: format!("missing column {idx}"),
            })
        };
        let coeff = |idx: usize| -> Result<Option<f64>, TableError> {
            let raw = field(idx)?;
            if raw.is_empty() {
                Ok(None)
            } else {
                raw.parse().map(Some).map_err(|e| TableError::BadRow {
                    row,
                    reason: format!("bad coefficient {raw:?}: {e}"),
                })
            }
        };
        results.push(AlignmentResult {
            feature: field(0)?.to_string(),
            model: field(1)?.to_string(),
            n_words: field(2)?.parse().map_err(|e| TableError::BadRow {
                row,
                reason: format!("bad count: {e}"),
            })?,
            pearson_raw: coeff(3)?,
            pearson_rounded: coeff(4)?,
            spearman_raw: coeff(5)?,
            spearman_rounded: coeff(6)?,
            divergence_flag: field(7)? == "true",
        });
    }
    Ok(results)
}
