//! Human norm datasets: words with mean ratings per feature.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::{Dataset, FeatureRegistry};

/// One word's human rating for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRating {
    pub word: String,
    pub human_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_raters: Option<u32>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("feature {0:?} is not registered for this dataset")]
    UnknownFeature(String),
    #[error("duplicate word {word:?} for feature {feature:?}")]
    DuplicateWord { feature: String, word: String },
    #[error("word {word:?}: mean {mean} outside scale {scale} of feature {feature:?}")]
    OutOfScale {
        feature: String,
        word: String,
        mean: f64,
        scale: String,
    },
    #[error("word is empty after trimming")]
    EmptyWord,
    #[error("word {word:?}: standard deviation {sd} is negative")]
    NegativeSd { word: String, sd: f64 },
    #[error("unable to open {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        source: serde_json::Error,
    },
}

/// Words x features with human mean ratings. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NormDataset {
    id: Dataset,
    ratings: BTreeMap<String, Vec<WordRating>>,
}

impl NormDataset {
    pub fn id(&self) -> Dataset {
        self.id
    }

    pub fn feature_ids(&self) -> impl Iterator<Item = &str> {
        self.ratings.keys().map(String::as_str)
    }

    pub fn ratings_for(&self, feature: &str) -> Option<&[WordRating]> {
        self.ratings.get(feature).map(Vec::as_slice)
    }

    pub fn word_count(&self, feature: &str) -> usize {
        self.ratings.get(feature).map_or(0, Vec::len)
    }

    /// Word -> mean lookup for one feature.
    pub fn means_by_word(&self, feature: &str) -> BTreeMap<&str, f64> {
        self.ratings
            .get(feature)
            .map(|rs| {
                rs.iter()
                    .map(|r| (r.word.as_str(), r.human_mean))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Serializes to the canonical line-delimited record file: one JSON
    /// record per word-feature pair carrying word, feature, mean, and sd.
    pub fn write_canonical<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        for (feature, ratings) in &self.ratings {
            for r in ratings {
                let record = CanonicalRecord {
                    word: r.word.clone(),
                    feature: feature.clone(),
                    mean: r.human_mean,
                    sd: r.human_sd,
                };
                serde_json::to_writer(&mut out, &record)
                    .map_err(|e| DatasetError::Io(e.into()))?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn write_canonical_path(&self, path: &Path) -> Result<(), DatasetError> {
        let file = std::fs::File::create(path)?;
        self.write_canonical(std::io::BufWriter::new(file))
    }

    /// Reads a canonical record file back into a dataset, revalidating every
    /// invariant against the registry.
    pub fn read_canonical_path(
        id: Dataset,
        registry: &FeatureRegistry,
        path: &Path,
    ) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path).map_err(|source| DatasetError::FileUnreadable {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_canonical(id, registry, BufReader::new(file))
    }

    pub fn read_canonical<R: BufRead>(
        id: Dataset,
        registry: &FeatureRegistry,
        reader: R,
    ) -> Result<Self, DatasetError> {
        let mut builder = NormDatasetBuilder::new(id, registry);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CanonicalRecord = serde_json::from_str(&line)
                .map_err(|source| DatasetError::Record { line: i + 1, source })?;
            builder.insert(
                &record.feature,
                WordRating {
                    word: record.word,
                    human_mean: record.mean,
                    human_sd: record.sd,
                    n_raters: None,
                },
            )?;
        }
        Ok(builder.build())
    }
}

#[derive(Serialize, Deserialize)]
struct CanonicalRecord {
    word: String,
    feature: String,
    mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sd: Option<f64>,
}

/// Validating builder; the only way to construct a [`NormDataset`].
pub struct NormDatasetBuilder<'a> {
    id: Dataset,
    registry: &'a FeatureRegistry,
    ratings: BTreeMap<String, Vec<WordRating>>,
    seen: BTreeMap<String, BTreeSet<String>>,
}

impl<'a> NormDatasetBuilder<'a> {
    pub fn new(id: Dataset, registry: &'a FeatureRegistry) -> Self {
        Self {
            id,
            registry,
            ratings: BTreeMap::new(),
            seen: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, feature_id: &str, rating: WordRating) -> Result<(), DatasetError> {
        let feature = self
            .registry
            .get(feature_id)
            .filter(|f| f.dataset == self.id)
            .ok_or_else(|| DatasetError::UnknownFeature(feature_id.to_string()))?;
        let word = rating.word.trim();
        if word.is_empty() {
            return Err(DatasetError::EmptyWord);
        }
        if !feature.scale.contains_f64(rating.human_mean) {
            return Err(DatasetError::OutOfScale {
                feature: feature_id.to_string(),
                word: word.to_string(),
                mean: rating.human_mean,
                scale: feature.scale.to_string(),
            });
        }
        if let Some(sd) = rating.human_sd {
            if sd < 0.0 {
                return Err(DatasetError::NegativeSd {
                    word: word.to_string(),
                    sd,
                });
            }
        }
        let seen = self.seen.entry(feature_id.to_string()).or_default();
        if !seen.insert(word.to_string()) {
            return Err(DatasetError::DuplicateWord {
                feature: feature_id.to_string(),
                word: word.to_string(),
            });
        }
        self.ratings
            .entry(feature_id.to_string())
            .or_default()
            .push(WordRating {
                word: word.to_string(),
                ..rating
            });
        Ok(())
    }

    pub fn build(self) -> NormDataset {
        NormDataset {
            id: self.id,
            ratings: self.ratings,
        }
    }
}
