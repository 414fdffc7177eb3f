//! Integer Likert scales.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when constructing a [`RatingScale`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScaleError {
    #[error("scale floor {min} must be below ceiling {max}")]
    Inverted { min: u8, max: u8 },
    #[error("scale ceiling {max} exceeds 9; every point must be a single digit")]
    NotSingleDigit { max: u8 },
}

/// The integer Likert range for one feature, e.g. 1-9 or 0-5.
///
/// Every point must serialize to a single decimal digit so that a rating can
/// appear as one generated token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawScale", into = "RawScale")]
pub struct RatingScale {
    min: u8,
    max: u8,
}

#[derive(Serialize, Deserialize)]
struct RawScale {
    min: u8,
    max: u8,
}

impl TryFrom<RawScale> for RatingScale {
    type Error = ScaleError;

    fn try_from(raw: RawScale) -> Result<Self, ScaleError> {
        RatingScale::new(raw.min, raw.max)
    }
}

impl From<RatingScale> for RawScale {
    fn from(s: RatingScale) -> Self {
        RawScale {
            min: s.min,
            max: s.max,
        }
    }
}

impl RatingScale {
    pub fn new(min: u8, max: u8) -> Result<Self, ScaleError> {
        if min >= max {
            return Err(ScaleError::Inverted { min, max });
        }
        if max > 9 {
            return Err(ScaleError::NotSingleDigit { max });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> u8 {
        self.min
    }

    pub fn max(&self) -> u8 {
        self.max
    }

    /// Number of scale points, between 2 and 10 by construction.
    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, value: i64) -> bool {
        value >= i64::from(self.min) && value <= i64::from(self.max)
    }

    pub fn contains_f64(&self, value: f64) -> bool {
        value >= f64::from(self.min) && value <= f64::from(self.max)
    }

    pub fn points(&self) -> impl Iterator<Item = u8> {
        self.min..=self.max
    }

    /// Clamps a real value into the scale bounds.
    pub fn clamp_f64(&self, value: f64) -> f64 {
        value.clamp(f64::from(self.min), f64::from(self.max))
    }
}

impl std::fmt::Display for RatingScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}
