//! Parses the published Glasgow and Lancaster norm tables.
//!
//! Column headers differ across releases of the published files, so the
//! mapping from feature id to column name is configuration with shipped
//! defaults. Malformed rows become report entries instead of aborting: one
//! bad row must not kill a 39,707-row ingest.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, NormDataset, NormDatasetBuilder, WordRating};
use crate::feature::{Dataset, FeatureRegistry};

/// Maps feature ids to the CSV columns holding their statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub word_column: String,
    /// feature id -> mean column name; must cover every registered feature
    /// of the target dataset.
    pub mean_columns: BTreeMap<String, String>,
    /// feature id -> standard deviation column name; optional per feature.
    #[serde(default)]
    pub sd_columns: BTreeMap<String, String>,
}

impl ColumnMapping {
    /// Default mapping for flat single-header exports of the Glasgow norms.
    pub fn glasgow_default() -> Self {
        let mean = [
            ("arousal", "AROU"),
            ("valence", "VAL"),
            ("dominance", "DOM"),
            ("concreteness", "CNC"),
            ("imageability", "IMAG"),
            ("familiarity", "FAM"),
            ("gender", "GEND"),
        ];
        Self {
            word_column: "Words".to_string(),
            mean_columns: mean
                .iter()
                .map(|(f, c)| (f.to_string(), c.to_string()))
                .collect(),
            sd_columns: BTreeMap::new(),
        }
    }

    /// Default mapping for the published Lancaster sensorimotor file. The
    /// body-part columns of that file are not mapped and stay ignored.
    pub fn lancaster_default() -> Self {
        let modalities = [
            ("interoceptive", "Interoceptive"),
            ("gustatory", "Gustatory"),
            ("olfactory", "Olfactory"),
            ("haptic", "Haptic"),
            ("auditory", "Auditory"),
            ("visual", "Visual"),
        ];
        Self {
            word_column: "Word".to_string(),
            mean_columns: modalities
                .iter()
                .map(|(f, c)| (f.to_string(), format!("{c}.mean")))
                .collect(),
            sd_columns: modalities
                .iter()
                .map(|(f, c)| (f.to_string(), format!("{c}.SD")))
                .collect(),
        }
    }
}

/// Accounting for one ingest: every input row is either accepted or recorded
/// as a violation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub violations: Vec<RowViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowViolation {
    /// 1-based data row index (header excluded).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unable to read {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("mapping lists feature {0:?} which is not registered for this dataset")]
    UnmappedFeature(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("requested {requested} words but feature {feature:?} has {available}")]
    NotEnoughWords {
        feature: String,
        requested: usize,
        available: usize,
    },
    #[error("feature {0:?} not present in dataset")]
    UnknownFeature(String),
}

/// Loads the Glasgow norms: 7 features per word.
pub fn load_glasgow(
    path: &Path,
    mapping: &ColumnMapping,
    registry: &FeatureRegistry,
) -> Result<(NormDataset, IngestReport), IngestError> {
    load_dataset(Dataset::Glasgow, path, mapping, registry)
}

/// Loads the Lancaster norms: 6 perceptual modalities per word. Columns not
/// named by the mapping, body-part ratings included, are ignored.
pub fn load_lancaster(
    path: &Path,
    mapping: &ColumnMapping,
    registry: &FeatureRegistry,
) -> Result<(NormDataset, IngestReport), IngestError> {
    load_dataset(Dataset::Lancaster, path, mapping, registry)
}

pub fn load_dataset(
    dataset: Dataset,
    path: &Path,
    mapping: &ColumnMapping,
    registry: &FeatureRegistry,
) -> Result<(NormDataset, IngestReport), IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    load_from_reader(dataset, file, mapping, registry)
}

pub fn load_from_reader<R: std::io::Read>(
    dataset: Dataset,
    reader: R,
    mapping: &ColumnMapping,
    registry: &FeatureRegistry,
) -> Result<(NormDataset, IngestReport), IngestError> {
    let features: Vec<_> = registry.features_for(dataset).collect();

    for id in mapping.mean_columns.keys() {
        if !features.iter().any(|f| &f.id == id) {
            return Err(IngestError::UnmappedFeature(id.clone()));
        }
    }
    for f in &features {
        if !mapping.mean_columns.contains_key(&f.id) {
            return Err(IngestError::UnmappedFeature(f.id.clone()));
        }
    }

    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };

    let word_idx = column(&mapping.word_column)?;
    let mut mean_idx = Vec::with_capacity(features.len());
    for f in &features {
        let mean_col = &mapping.mean_columns[&f.id];
        let sd = match mapping.sd_columns.get(&f.id) {
            Some(name) => Some(column(name)?),
            None => None,
        };
        mean_idx.push((f.id.clone(), f.scale, column(mean_col)?, sd));
    }

    let mut builder = NormDatasetBuilder::new(dataset, registry);
    let mut report = IngestReport::default();
    let mut accepted_words = std::collections::BTreeSet::new();

    'rows: for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        report.rows_read += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                report.violations.push(RowViolation {
                    row,
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let word = match record.get(word_idx).map(str::trim) {
            Some(w) if !w.is_empty() => w.to_string(),
            _ => {
                report.violations.push(RowViolation {
                    row,
                    reason: "empty word".to_string(),
                });
                continue;
            }
        };
        if accepted_words.contains(&word) {
            report.violations.push(RowViolation {
                row,
                reason: format!("duplicate word {word:?}"),
            });
            continue;
        }

        // Validate the whole row before inserting anything, so a rejected
        // row leaves no partial ratings behind.
        let mut parsed = Vec::with_capacity(mean_idx.len());
        for (feature_id, scale, mi, si) in &mean_idx {
            let raw = record.get(*mi).unwrap_or("").trim();
            let mean: f64 = match raw.parse() {
                Ok(v) => v,
                Err(_) => {
                    report.violations.push(RowViolation {
                        row,
                        reason: format!("{feature_id}: unparseable mean {raw:?}"),
                    });
                    continue 'rows;
                }
            };
            if !mean.is_finite() || !scale.contains_f64(mean) {
                report.violations.push(RowViolation {
                    row,
                    reason: format!("{feature_id}: mean {mean} outside scale {scale}"),
                });
                continue 'rows;
            }
            let sd = match si {
                Some(si) => {
                    let raw = record.get(*si).unwrap_or("").trim();
                    match raw.parse::<f64>() {
                        Ok(v) if v >= 0.0 && v.is_finite() => Some(v),
                        _ => {
                            report.violations.push(RowViolation {
                                row,
                                reason: format!("{feature_id}: invalid sd {raw:?}"),
                            });
                            continue 'rows;
                        }
                    }
                }
                None => None,
            };
            parsed.push((feature_id.clone(), mean, sd));
        }

        for (feature_id, mean, sd) in parsed {
            builder.insert(
                &feature_id,
                WordRating {
                    word: word.clone(),
                    human_mean: mean,
                    human_sd: sd,
                    n_raters: None,
                },
            )?;
        }
        accepted_words.insert(word);
        report.rows_accepted += 1;
    }

    Ok((builder.build(), report))
}

/// Deterministic uniform sample without replacement, preserving dataset
/// order. The same seed always selects the same words.
pub fn sample_words(
    ds: &NormDataset,
    feature: &str,
    n: usize,
    seed: u64,
) -> Result<Vec<WordRating>, IngestError> {
    let ratings = ds
        .ratings_for(feature)
        .ok_or_else(|| IngestError::UnknownFeature(feature.to_string()))?;
    if n > ratings.len() {
        return Err(IngestError::NotEnoughWords {
            feature: feature.to_string(),
            requested: n,
            available: ratings.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, ratings.len(), n).into_vec();
    indices.sort_unstable();
    Ok(indices.into_iter().map(|i| ratings[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::feature_registry;
    use proptest::prelude::*;
    use std::fmt::Write as _;

    fn glasgow_csv(rows: &[(&str, [f64; 7])]) -> String {
        let mut s = String::from("Words,Length,AROU,VAL,DOM,CNC,IMAG,FAM,GEND\n");
        for (word, vals) in rows {
            write!(s, "{word},{}", word.len()).unwrap();
            for v in vals {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    fn load_glasgow_str(content: &str) -> (NormDataset, IngestReport) {
        let reg = feature_registry();
        load_from_reader(
            Dataset::Glasgow,
            content.as_bytes(),
            &ColumnMapping::glasgow_default(),
            &reg,
        )
        .unwrap()
    }

    #[test]
    fn header_only_file_yields_empty_dataset() {
        let (ds, report) = load_glasgow_str("Words,Length,AROU,VAL,DOM,CNC,IMAG,FAM,GEND\n");
        assert_eq!(report.rows_read, 0);
        assert_eq!(report.rows_accepted, 0);
        assert_eq!(ds.word_count("arousal"), 0);
    }

    #[test]
    fn out_of_range_row_is_rejected_with_violation() {
        let csv = glasgow_csv(&[
            ("dance", [6.0, 7.0, 5.0, 6.0, 6.5, 6.0, 4.0]),
            ("storm", [8.0, 3.0, 2.0, 12.0, 6.0, 6.0, 4.0]),
        ]);
        let (ds, report) = load_glasgow_str(&csv);
        assert_eq!(report.rows_read, 2);
        assert_eq!(report.rows_accepted, 1);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].row, 2);
        assert!(report.violations[0].reason.contains("concreteness"));
        assert_eq!(ds.word_count("concreteness"), 1);
    }

    #[test]
    fn duplicate_word_second_occurrence_rejected() {
        let csv = glasgow_csv(&[
            ("dance", [6.0, 7.0, 5.0, 6.0, 6.5, 6.0, 4.0]),
            ("dance", [5.0, 6.0, 5.0, 6.0, 6.5, 6.0, 4.0]),
        ]);
        let (ds, report) = load_glasgow_str(&csv);
        assert_eq!(report.rows_accepted, 1);
        assert!(report.violations[0].reason.contains("duplicate"));
        assert_eq!(ds.word_count("arousal"), 1);
    }

    #[test]
    fn missing_column_is_fatal() {
        let reg = feature_registry();
        let err = load_from_reader(
            Dataset::Glasgow,
            "Words,AROU\nx,3\n".as_bytes(),
            &ColumnMapping::glasgow_default(),
            &reg,
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(_)));
    }

    #[test]
    fn body_part_columns_are_ignored() {
        let reg = feature_registry();
        let csv = "Word,Auditory.mean,Gustatory.mean,Haptic.mean,Interoceptive.mean,\
Olfactory.mean,Visual.mean,Auditory.SD,Gustatory.SD,Haptic.SD,Interoceptive.SD,Olfactory.SD,\
Visual.SD,Foot_leg.mean,Hand_arm.mean,Head.mean,Mouth.mean,Torso.mean\n\
lemon,1.2,4.45,2.6,0.8,3.1,4.8,0.4,0.5,0.6,0.3,0.7,0.2,0.1,1.4,2.8,3.9,0.2\n";
        let (ds, report) = load_from_reader(
            Dataset::Lancaster,
            csv.as_bytes(),
            &ColumnMapping::lancaster_default(),
            &reg,
        )
        .unwrap();
        assert_eq!(report.rows_accepted, 1);
        let ids: Vec<_> = ds.feature_ids().collect();
        assert_eq!(
            ids,
            [
                "auditory",
                "gustatory",
                "haptic",
                "interoceptive",
                "olfactory",
                "visual"
            ]
        );
        let lemon = &ds.ratings_for("gustatory").unwrap()[0];
        assert_eq!(lemon.human_mean, 4.45);
        assert_eq!(lemon.human_sd, Some(0.5));
    }

    #[test]
    fn mapping_with_unregistered_feature_is_rejected() {
        let reg = feature_registry();
        let mut mapping = ColumnMapping::lancaster_default();
        mapping
            .mean_columns
            .insert("foot_leg".to_string(), "Foot_leg.mean".to_string());
        let err = load_from_reader(Dataset::Lancaster, "Word\n".as_bytes(), &mapping, &reg)
            .unwrap_err();
        assert!(matches!(err, IngestError::UnmappedFeature(f) if f == "foot_leg"));
    }

    #[test]
    fn loading_is_idempotent() {
        let csv = glasgow_csv(&[
            ("dance", [6.0, 7.0, 5.0, 6.0, 6.5, 6.0, 4.0]),
            ("storm", [8.0, 3.0, 2.0, 6.5, 6.0, 6.0, 4.0]),
        ]);
        let (a, ra) = load_glasgow_str(&csv);
        let (b, rb) = load_glasgow_str(&csv);
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn sampling_is_deterministic_and_order_preserving() {
        let rows: Vec<(String, [f64; 7])> = (0..50)
            .map(|i| (format!("w{i:03}"), [5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 4.0]))
            .collect();
        let borrowed: Vec<(&str, [f64; 7])> =
            rows.iter().map(|(w, v)| (w.as_str(), *v)).collect();
        let (ds, _) = load_glasgow_str(&glasgow_csv(&borrowed));

        let a = sample_words(&ds, "arousal", 10, 7).unwrap();
        let b = sample_words(&ds, "arousal", 10, 7).unwrap();
        assert_eq!(a, b);
        let words: Vec<_> = a.iter().map(|r| r.word.clone()).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted, "sample preserves dataset order");

        let c = sample_words(&ds, "arousal", 10, 8).unwrap();
        assert_ne!(a, c, "different seeds pick different words");

        let full = sample_words(&ds, "arousal", 50, 3).unwrap();
        assert_eq!(full, ds.ratings_for("arousal").unwrap());

        assert!(matches!(
            sample_words(&ds, "arousal", 51, 3),
            Err(IngestError::NotEnoughWords { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Every row is accounted for and no accepted rating escapes its
        // scale, no matter what the table holds.
        #[test]
        fn rows_reconcile_and_bounds_hold(
            rows in proptest::collection::vec(
                (
                    "[a-z]{1,8}",
                    proptest::collection::vec(
                        prop_oneof![
                            (-5.0f64..15.0).prop_map(|v| format!("{v:.2}")),
                            Just("oops".to_string()),
                            Just(String::new()),
                        ],
                        7,
                    ),
                ),
                0..40,
            )
        ) {
            let mut csv = String::from("Words,Length,AROU,VAL,DOM,CNC,IMAG,FAM,GEND\n");
            for (word, vals) in &rows {
                csv.push_str(word);
                csv.push_str(",0");
                for v in vals {
                    csv.push(',');
                    csv.push_str(v);
                }
                csv.push('\n');
            }
            let reg = feature_registry();
            let (ds, report) = load_from_reader(
                Dataset::Glasgow,
                csv.as_bytes(),
                &ColumnMapping::glasgow_default(),
                &reg,
            ).unwrap();

            prop_assert_eq!(report.rows_read, rows.len());
            prop_assert_eq!(
                report.rows_read,
                report.rows_accepted + report.violations.len()
            );
            for f in reg.features_for(Dataset::Glasgow) {
                if let Some(ratings) = ds.ratings_for(&f.id) {
                    for r in ratings {
                        prop_assert!(f.scale.contains_f64(r.human_mean));
                    }
                }
            }
        }
    }
}
