//! The feature registry: the thirteen in-scope word norms, their scales, and
//! the instruction texts used to prompt a model.
//!
//! Prompt templates are data, not code. The built-in registry carries the
//! study instructions verbatim where published and transcriptions elsewhere;
//! a registry file can replace the whole set without a rebuild.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scale::{RatingScale, ScaleError};

/// Placeholder the rendered word is substituted for.
pub const WORD_PLACEHOLDER: &str = "{word}";

/// Sentence every prompt must carry so answers stay a single rating token.
pub const ANSWER_INSTRUCTION: &str = "Please answer only with the number.";

/// Source dataset of a norm feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Glasgow,
    Lancaster,
}

impl Dataset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dataset::Glasgow => "glasgow",
            Dataset::Lancaster => "lancaster",
        }
    }
}

impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Dataset {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glasgow" => Ok(Dataset::Glasgow),
            "lancaster" => Ok(Dataset::Lancaster),
            other => Err(RegistryError::UnknownDataset(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("feature {id:?}: {source}")]
    Scale { id: String, source: ScaleError },
    #[error("feature {id:?}: template must contain exactly one {WORD_PLACEHOLDER} placeholder")]
    PlaceholderCount { id: String },
    #[error("feature {id:?}: template must contain the sentence {ANSWER_INSTRUCTION:?}")]
    MissingAnswerInstruction { id: String },
    #[error("duplicate feature id {0:?}")]
    DuplicateFeature(String),
    #[error("unable to read registry file {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid registry file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// How the substituted word is quoted inside a prompt.
///
/// The printed study instructions use typographic quotes; some norm studies
/// use straight ASCII quotes instead. The choice changes the prompt bytes and
/// therefore the request fingerprint, so it is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteStyle {
    #[default]
    Typographic,
    Straight,
}

impl QuoteStyle {
    pub fn wrap(&self, word: &str) -> String {
        match self {
            QuoteStyle::Typographic => format!("\u{201c}{word}\u{201d}"),
            QuoteStyle::Straight => format!("\"{word}\""),
        }
    }
}

/// One rated word property: identity, scale, and the prompt used to elicit a
/// rating for a single word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormFeature {
    pub id: String,
    pub dataset: Dataset,
    pub scale: RatingScale,
    pub prompt_template: String,
    pub display_name: String,
}

impl NormFeature {
    pub fn new(
        id: &str,
        dataset: Dataset,
        scale: RatingScale,
        prompt_template: &str,
        display_name: &str,
    ) -> Result<Self, RegistryError> {
        if prompt_template.matches(WORD_PLACEHOLDER).count() != 1 {
            return Err(RegistryError::PlaceholderCount { id: id.to_string() });
        }
        if !prompt_template.contains(ANSWER_INSTRUCTION) {
            return Err(RegistryError::MissingAnswerInstruction { id: id.to_string() });
        }
        Ok(Self {
            id: id.to_string(),
            dataset,
            scale,
            prompt_template: prompt_template.to_string(),
            display_name: display_name.to_string(),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("word is empty after trimming")]
    EmptyWord,
}

/// Substitutes the word, wrapped in quotes, into the feature's template.
///
/// Rendering is pure: identical inputs produce byte-identical prompts.
pub fn render_prompt(feature: &NormFeature, word: &str) -> Result<String, RenderError> {
    render_prompt_with(feature, word, QuoteStyle::default())
}

pub fn render_prompt_with(
    feature: &NormFeature,
    word: &str,
    quotes: QuoteStyle,
) -> Result<String, RenderError> {
    let word = word.trim();
    if word.is_empty() {
        return Err(RenderError::EmptyWord);
    }
    Ok(feature
        .prompt_template
        .replacen(WORD_PLACEHOLDER, &quotes.wrap(word), 1))
}

/// The ordered collection of norm features a run evaluates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRegistry {
    features: Vec<NormFeature>,
}

impl FeatureRegistry {
    /// The built-in registry: 7 Glasgow features and 6 Lancaster perceptual
    /// modalities. Body-part associations are deliberately absent.
    pub fn builtin() -> Self {
        let f = |id, dataset, min, max, template: &str, display: &str| {
            NormFeature::new(
                id,
                dataset,
                RatingScale::new(min, max).expect("built-in scale"),
                template,
                display,
            )
            .expect("built-in feature")
        };
        let g = Dataset::Glasgow;
        let l = Dataset::Lancaster;
        let features = vec![
            f("arousal", g, 1, 9, GLASGOW_AROUSAL, "Arousal"),
            f("valence", g, 1, 9, GLASGOW_VALENCE, "Valence"),
            f("dominance", g, 1, 9, GLASGOW_DOMINANCE, "Dominance"),
            f("concreteness", g, 1, 9, GLASGOW_CONCRETENESS, "Concreteness"),
            f("imageability", g, 1, 9, GLASGOW_IMAGEABILITY, "Imageability"),
            f("familiarity", g, 1, 9, GLASGOW_FAMILIARITY, "Familiarity"),
            f("gender", g, 1, 7, GLASGOW_GENDER, "Gender"),
            f(
                "interoceptive",
                l,
                0,
                5,
                &lancaster_template("by sensations inside your body"),
                "Interoceptive",
            ),
            f(
                "gustatory",
                l,
                0,
                5,
                &lancaster_template("by tasting"),
                "Gustatory",
            ),
            f(
                "olfactory",
                l,
                0,
                5,
                &lancaster_template("by smelling"),
                "Olfactory",
            ),
            f(
                "haptic",
                l,
                0,
                5,
                &lancaster_template("by feeling through touch"),
                "Haptic",
            ),
            f(
                "auditory",
                l,
                0,
                5,
                &lancaster_template("by hearing"),
                "Auditory",
            ),
            f("visual", l, 0, 5, &lancaster_template("by seeing"), "Visual"),
        ];
        Self { features }
    }

    /// Builds a registry from a list, rejecting duplicate ids.
    pub fn from_features(features: Vec<NormFeature>) -> Result<Self, RegistryError> {
        let mut seen = BTreeSet::new();
        for feature in &features {
            if !seen.insert(feature.id.clone()) {
                return Err(RegistryError::DuplicateFeature(feature.id.clone()));
            }
        }
        Ok(Self { features })
    }

    /// Loads a full replacement registry from a TOML file.
    ///
    /// Format, one `[[feature]]` table per norm:
    ///
    /// ```toml
    /// [[feature]]
    /// id = "arousal"
    /// dataset = "glasgow"      # or "lancaster"
    /// min = 1
    /// max = 9
    /// display_name = "Arousal"
    /// template = "... word {word} ... Please answer only with the number."
    /// ```
    pub fn from_toml_path(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::FileUnreadable {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, RegistryError> {
        #[derive(Deserialize)]
        struct RegistryFile {
            #[serde(default)]
            feature: Vec<FeatureEntry>,
        }
        #[derive(Deserialize)]
        struct FeatureEntry {
            id: String,
            dataset: Dataset,
            min: u8,
            max: u8,
            template: String,
            display_name: Option<String>,
        }

        let file: RegistryFile = toml::from_str(text)?;
        let mut features = Vec::with_capacity(file.feature.len());
        for entry in file.feature {
            let scale =
                RatingScale::new(entry.min, entry.max).map_err(|source| RegistryError::Scale {
                    id: entry.id.clone(),
                    source,
                })?;
            let display = entry.display_name.unwrap_or_else(|| entry.id.clone());
            features.push(NormFeature::new(
                &entry.id,
                entry.dataset,
                scale,
                &entry.template,
                &display,
            )?);
        }
        Self::from_features(features)
    }

    pub fn features(&self) -> &[NormFeature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&NormFeature> {
        self.features.iter().find(|f| f.id == id)
    }

    pub fn features_for(&self, dataset: Dataset) -> impl Iterator<Item = &NormFeature> {
        self.features.iter().filter(move |f| f.dataset == dataset)
    }

    /// Dataset owning a feature id, if registered.
    pub fn dataset_of(&self, id: &str) -> Option<Dataset> {
        self.get(id).map(|f| f.dataset)
    }
}

/// Convenience accessor for the built-in thirteen features.
pub fn feature_registry() -> FeatureRegistry {
    FeatureRegistry::builtin()
}

const GLASGOW_AROUSAL: &str = "Arousal is a measure of excitement versus calmness. A word is \
AROUSING if it makes you feel stimulated, excited, frenzied, jittery, or wide-awake. A word is \
UNAROUSING if it makes you feel relaxed, calm, sluggish, dull, or sleepy. Please indicate how \
arousing you think word {word} is on a scale of 1 (VERY UNAROUSING) to 9 (VERY AROUSING), with \
the midpoint representing moderate arousal. Please answer only with the number.";

const GLASGOW_VALENCE: &str = "Valence is a measure of value or worth. A word is POSITIVE if it \
represents something considered good, whereas a word is NEGATIVE if it represents something \
considered bad. Please indicate how positive or negative you think word {word} is on a scale of \
1 (VERY NEGATIVE) to 9 (VERY POSITIVE), with the midpoint representing neutral. Please answer \
only with the number.";

const GLASGOW_DOMINANCE: &str = "Dominance is a measure of the degree of control you feel. A \
word can make you feel DOMINANT if you feel controlling, influential, important, autonomous, or \
in control. A word can make you feel CONTROLLED if you feel awed, submissive, influenced, \
cared-for, or guided. Please indicate how dominant word {word} makes you feel on a scale of 1 \
(VERY CONTROLLED) to 9 (VERY DOMINANT), with the midpoint representing moderate dominance. \
Please answer only with the number.";

const GLASGOW_CONCRETENESS: &str = "Concreteness is a measure of how concrete or abstract \
something is. A word is CONCRETE if it represents something that exists in a definite physical \
form in the real world. A word is ABSTRACT if it represents a concept or idea that cannot be \
experienced directly through the senses. Please indicate how concrete you think word {word} is \
on a scale of 1 (VERY ABSTRACT) to 9 (VERY CONCRETE), with the midpoint representing moderate \
concreteness. Please answer only with the number.";

const GLASGOW_IMAGEABILITY: &str = "Imageability is a measure of how easy or difficult something \
is to imagine. A word is IMAGEABLE if it evokes a mental image or sensory experience quickly and \
easily. A word is UNIMAGEABLE if it evokes a mental image or sensory experience slowly or with \
great difficulty. Please indicate how imageable you think word {word} is on a scale of 1 (VERY \
UNIMAGEABLE) to 9 (VERY IMAGEABLE), with the midpoint representing moderate imageability. \
Please answer only with the number.";

const GLASGOW_FAMILIARITY: &str = "Familiarity is a measure of how familiar something is. A word \
is FAMILIAR if you see, hear, or use it often and its meaning is well known to you. A word is \
UNFAMILIAR if you rarely see, hear, or use it and its meaning is unknown or poorly known to you. \
Please indicate how familiar you think word {word} is on a scale of 1 (VERY UNFAMILIAR) to 9 \
(VERY FAMILIAR), with the midpoint representing moderate familiarity. Please answer only with \
the number.";

const GLASGOW_GENDER: &str = "Gender is a measure of how strongly a word is associated with male \
or female behaviour. Please indicate the gender you associate with word {word} on a scale of 1 \
(VERY FEMININE) to 7 (VERY MASCULINE), with the midpoint representing no gender association. \
Please answer only with the number.";

/// The six Lancaster modality prompts share one instruction preamble and
/// differ only in the sense verb phrase. The question ends with the word, so
/// the answer sentence sits mid-prompt.
fn lancaster_template(sense_phrase: &str) -> String {
    format!(
        "You will be asked to rate how much you experience everyday concepts using perceptual \
senses. There are no right or wrong answers so please use your own judgement. The rating scale \
runs from 0 (not experienced at all with that sense) to 5 (experienced greatly with that \
sense). Please answer only with the number. To what extent do you experience {sense_phrase} \
word {{word}}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_registry_has_thirteen_features() {
        let reg = feature_registry();
        assert_eq!(reg.len(), 13);
        assert_eq!(reg.features_for(Dataset::Glasgow).count(), 7);
        assert_eq!(reg.features_for(Dataset::Lancaster).count(), 6);
    }

    #[test]
    fn builtin_registry_ids_and_scales() {
        let reg = feature_registry();
        let glasgow = [
            "arousal",
            "valence",
            "dominance",
            "concreteness",
            "imageability",
            "familiarity",
            "gender",
        ];
        for id in glasgow {
            let f = reg.get(id).unwrap();
            assert_eq!(f.dataset, Dataset::Glasgow);
            let expected_max = if id == "gender" { 7 } else { 9 };
            assert_eq!((f.scale.min(), f.scale.max()), (1, expected_max), "{id}");
        }
        let lancaster = [
            "interoceptive",
            "gustatory",
            "olfactory",
            "haptic",
            "auditory",
            "visual",
        ];
        for id in lancaster {
            let f = reg.get(id).unwrap();
            assert_eq!(f.dataset, Dataset::Lancaster);
            assert_eq!((f.scale.min(), f.scale.max()), (0, 5), "{id}");
        }
    }

    #[test]
    fn arousal_prompt_matches_study_instructions() {
        let reg = feature_registry();
        let arousal = reg.get("arousal").unwrap();
        assert!(arousal.prompt_template.contains("VERY UNAROUSING"));
        assert!(arousal.prompt_template.contains("VERY AROUSING"));
        assert_eq!((arousal.scale.min(), arousal.scale.max()), (1, 9));
    }

    #[test]
    fn gustatory_scale_is_zero_to_five() {
        let reg = feature_registry();
        let gustatory = reg.get("gustatory").unwrap();
        assert_eq!((gustatory.scale.min(), gustatory.scale.max()), (0, 5));
        assert!(gustatory
            .prompt_template
            .contains("0 (not experienced at all with that sense) to 5"));
    }

    #[test]
    fn every_template_carries_the_answer_instruction_once() {
        for f in feature_registry().features() {
            assert!(
                f.prompt_template.contains(ANSWER_INSTRUCTION),
                "{}",
                f.id
            );
            assert_eq!(
                f.prompt_template.matches(WORD_PLACEHOLDER).count(),
                1,
                "{}",
                f.id
            );
        }
    }

    #[test]
    fn every_scale_point_is_one_digit() {
        for f in feature_registry().features() {
            for p in f.scale.points() {
                assert_eq!(p.to_string().len(), 1);
            }
        }
    }

    #[test]
    fn render_substitutes_quoted_word() {
        let reg = feature_registry();
        let arousal = reg.get("arousal").unwrap();
        let prompt = render_prompt(arousal, "dance").unwrap();
        assert!(prompt.contains("word \u{201c}dance\u{201d} is on a scale of 1"));
        assert!(!prompt.contains(WORD_PLACEHOLDER));
    }

    #[test]
    fn gustatory_prompt_ends_with_the_word() {
        let reg = feature_registry();
        let gustatory = reg.get("gustatory").unwrap();
        let prompt = render_prompt(gustatory, "lemon").unwrap();
        assert!(prompt.ends_with("experience by tasting word \u{201c}lemon\u{201d}"));
    }

    #[test]
    fn render_rejects_blank_words() {
        let reg = feature_registry();
        let arousal = reg.get("arousal").unwrap();
        assert_eq!(render_prompt(arousal, ""), Err(RenderError::EmptyWord));
        assert_eq!(render_prompt(arousal, "   "), Err(RenderError::EmptyWord));
    }

    #[test]
    fn straight_quotes_are_available() {
        let reg = feature_registry();
        let arousal = reg.get("arousal").unwrap();
        let prompt = render_prompt_with(arousal, "dance", QuoteStyle::Straight).unwrap();
        assert!(prompt.contains("word \"dance\" is"));
    }

    #[test]
    fn rendering_is_pure() {
        let reg = feature_registry();
        let visual = reg.get("visual").unwrap();
        let a = render_prompt(visual, "toast (bread)").unwrap();
        let b = render_prompt(visual, "toast (bread)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn registry_file_replaces_builtin() {
        let text = r#"
[[feature]]
id = "iconicity"
dataset = "glasgow"
min = 1
max = 7
display_name = "Iconicity"
template = "How iconic is word {word}? Please answer only with the number."
"#;
        let reg = FeatureRegistry::from_toml(text).unwrap();
        assert_eq!(reg.len(), 1);
        let f = reg.get("iconicity").unwrap();
        assert_eq!((f.scale.min(), f.scale.max()), (1, 7));
    }

    #[test]
    fn registry_file_rejects_bad_templates() {
        let missing_placeholder = r#"
[[feature]]
id = "x"
dataset = "glasgow"
min = 1
max = 9
template = "No placeholder. Please answer only with the number."
"#;
        assert!(matches!(
            FeatureRegistry::from_toml(missing_placeholder),
            Err(RegistryError::PlaceholderCount { .. })
        ));

        let missing_instruction = r#"
[[feature]]
id = "x"
dataset = "glasgow"
min = 1
max = 9
template = "Rate word {word} from 1 to 9."
"#;
        assert!(matches!(
            FeatureRegistry::from_toml(missing_instruction),
            Err(RegistryError::MissingAnswerInstruction { .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let reg = feature_registry();
        let mut features = reg.features().to_vec();
        features.push(features[0].clone());
        assert!(matches!(
            FeatureRegistry::from_features(features),
            Err(RegistryError::DuplicateFeature(_))
        ));
    }

    proptest! {
        // Substituting a word and then removing the quoted form recovers the
        // stored template.
        #[test]
        fn templates_round_trip(word in "[a-z]{1,12}( \\([a-z]{1,8}\\))?") {
            for feature in feature_registry().features() {
                let rendered = render_prompt(feature, &word).unwrap();
                let quoted = QuoteStyle::Typographic.wrap(word.trim());
                let recovered = rendered.replacen(&quoted, WORD_PLACEHOLDER, 1);
                prop_assert_eq!(&recovered, &feature.prompt_template);
            }
        }
    }
}
