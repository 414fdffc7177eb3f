//! Turns a raw token distribution into the two per-word rating estimates:
//! the argmax answer and the probability-weighted expected value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::TokenDistribution;
use crate::scale::RatingScale;

/// Default floor on retained probability mass; below it a word counts as a
/// non-compliant answer in reports.
pub const DEFAULT_COVERAGE_FLOOR: f64 = 0.25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no token maps to a value on the rating scale")]
    NoValidToken,
}

/// Probability mass over the integer points of one rating scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleDistribution {
    probabilities: BTreeMap<u8, f64>,
    coverage_mass: f64,
}

impl ScaleDistribution {
    /// Directly builds a distribution from scale points; probabilities must
    /// sum to 1 within 1e-9.
    pub fn new(probabilities: BTreeMap<u8, f64>, coverage_mass: f64) -> Result<Self, ExtractError> {
        if probabilities.is_empty() {
            return Err(ExtractError::NoValidToken);
        }
        let total: f64 = probabilities.values().sum();
        debug_assert!(
            (total - 1.0).abs() <= 1e-9,
            "scale distribution must be normalized, got {total}"
        );
        Ok(Self {
            probabilities,
            coverage_mass,
        })
    }

    pub fn probabilities(&self) -> &BTreeMap<u8, f64> {
        &self.probabilities
    }

    /// Probability mass that landed on valid scale tokens before
    /// renormalization.
    pub fn coverage_mass(&self) -> f64 {
        self.coverage_mass
    }
}

/// Maps raw first-token alternatives onto the scale.
///
/// Tokens are whitespace-trimmed; a token parsing as an integer on the scale
/// contributes its probability to that value (so "7" and " 7" merge); all
/// other tokens are dropped. The retained mass is the coverage, and the
/// result is renormalized to sum to 1.
pub fn extract_scale_distribution(
    raw: &TokenDistribution,
    scale: RatingScale,
) -> Result<ScaleDistribution, ExtractError> {
    let mut retained: BTreeMap<u8, f64> = BTreeMap::new();
    let mut coverage = 0.0;
    for (token, &p) in raw.entries() {
        let trimmed = token.trim();
        if let Ok(value) = trimmed.parse::<i64>() {
            if scale.contains(value) {
                *retained.entry(value as u8).or_insert(0.0) += p;
                coverage += p;
            }
        }
    }
    if retained.is_empty() || coverage <= 0.0 {
        return Err(ExtractError::NoValidToken);
    }
    let probabilities = retained
        .into_iter()
        .map(|(v, p)| (v, p / coverage))
        .collect();
    Ok(ScaleDistribution {
        probabilities,
        coverage_mass: coverage,
    })
}

/// Expected value: the sum of each scale value times its probability.
///
/// Accumulated with an error-compensated dot product so decimal-representable
/// fixtures come out exact; always within the support's bounds.
pub fn weighted_estimate(d: &ScaleDistribution) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for (&value, &p) in &d.probabilities {
        let v = f64::from(value);
        let product = v * p;
        let product_error = v.mul_add(p, -product);
        let (s, sum_error) = two_sum(sum, product);
        sum = s;
        compensation += product_error + sum_error;
    }
    sum + compensation
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let error = (a - (s - bb)) + (b - bb);
    (s, error)
}

/// The scale point with the largest probability; ties break toward the lower
/// value so the result is deterministic.
pub fn argmax_estimate(d: &ScaleDistribution) -> u8 {
    let mut best_value = 0u8;
    let mut best_p = f64::NEG_INFINITY;
    for (&value, &p) in &d.probabilities {
        if p > best_p {
            best_p = p;
            best_value = value;
        }
    }
    best_value
}

/// The two estimates for one (word, feature, model) query, ready for the
/// line-delimited estimate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingEstimate {
    pub word: String,
    pub feature: String,
    pub model: String,
    pub argmax: u8,
    pub weighted: f64,
    pub coverage_mass: f64,
}

impl RatingEstimate {
    pub fn from_distribution(
        word: &str,
        feature: &str,
        model: &str,
        raw: &TokenDistribution,
        scale: RatingScale,
    ) -> Result<Self, ExtractError> {
        let d = extract_scale_distribution(raw, scale)?;
        Ok(Self {
            word: word.to_string(),
            feature: feature.to_string(),
            model: model.to_string(),
            argmax: argmax_estimate(&d),
            weighted: weighted_estimate(&d),
            coverage_mass: d.coverage_mass(),
        })
    }
}
