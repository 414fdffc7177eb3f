//! Rating backends: a live client for OpenAI-compatible endpoints that
//! requests first-token log-probabilities, plus record/replay and mock
//! backends for offline runs.

mod cache;
mod live;
mod mock;

pub use cache::{QueryCache, QueryRecord, ReplayBackend};
pub use live::LiveClient;
pub use mock::MockBackend;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scale::RatingScale;

/// Slack allowed on the total probability mass; top-k truncation means mass
/// may be missing, never exceeded.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Configuration for one rating backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Fixed at zero for faithful runs; anything else trips validation.
    #[serde(default)]
    pub temperature: f64,
    /// Token alternatives requested per position; at least the number of
    /// scale points, 10 or more recommended.
    #[serde(default = "default_top_logprobs")]
    pub top_logprobs: u8,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Sleep before retry attempt i is `backoff_ms[min(i, len - 1)]`.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: Vec<u64>,
    /// Concurrent in-flight requests for batch dispatch.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Append-only record file for caching and replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    /// Environment variable holding the API key.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_top_logprobs() -> u8 {
    10
}
fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> Vec<u64> {
    vec![200, 1000, 4000]
}
fn default_parallelism() -> usize {
    4
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}
fn default_timeout_secs() -> u64 {
    60
}

impl BackendConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature: 0.0,
            top_logprobs: default_top_logprobs(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            parallelism: default_parallelism(),
            cache: None,
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
        }
    }

    /// Checks the config against a scale before a run.
    pub fn validate_for(&self, scale: &RatingScale) -> Result<(), QueryError> {
        if self.temperature != 0.0 {
            return Err(QueryError::InvalidConfig(format!(
                "temperature must be 0 for reproducible runs, got {}",
                self.temperature
            )));
        }
        if usize::from(self.top_logprobs) < scale.len() {
            return Err(QueryError::InvalidConfig(format!(
                "top_logprobs {} cannot cover the {} points of scale {}",
                self.top_logprobs,
                scale.len(),
                scale
            )));
        }
        Ok(())
    }

    /// Fingerprint of a request against this backend; stable across versions
    /// for unchanged inputs.
    pub fn fingerprint(&self, prompt: &str) -> String {
        fingerprint(&self.model, prompt, self.temperature, self.top_logprobs)
    }
}

/// Pure function of the request parameters that identify a query.
pub fn fingerprint(model: &str, prompt: &str, temperature: f64, top_logprobs: u8) -> String {
    let mut hasher = Sha256::new();
    for part in [
        model,
        prompt,
        &format!("{temperature}"),
        &top_logprobs.to_string(),
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Where a distribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionSource {
    Live,
    Replay,
    Mock,
}

/// First-token alternatives and their probabilities.
///
/// Probabilities are each in (0, 1] and sum to at most 1 + [`MASS_TOLERANCE`];
/// violations are rejected at construction so they never pass downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct TokenDistribution {
    entries: BTreeMap<String, f64>,
    source: DistributionSource,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    entries: BTreeMap<String, f64>,
    source: DistributionSource,
}

impl TryFrom<RawDistribution> for TokenDistribution {
    type Error = QueryError;

    fn try_from(raw: RawDistribution) -> Result<Self, QueryError> {
        TokenDistribution::new(raw.entries, raw.source)
    }
}

impl From<TokenDistribution> for RawDistribution {
    fn from(d: TokenDistribution) -> Self {
        RawDistribution {
            entries: d.entries,
            source: d.source,
        }
    }
}

impl TokenDistribution {
    pub fn new(
        entries: BTreeMap<String, f64>,
        source: DistributionSource,
    ) -> Result<Self, QueryError> {
        let mut total = 0.0;
        for (token, &p) in &entries {
            if !(p > 0.0 && p <= 1.0) {
                return Err(QueryError::InvalidDistribution(format!(
                    "token {token:?} has probability {p}, outside (0, 1]"
                )));
            }
            total += p;
        }
        if total > 1.0 + MASS_TOLERANCE {
            return Err(QueryError::InvalidDistribution(format!(
                "total probability mass {total} exceeds 1"
            )));
        }
        Ok(Self { entries, source })
    }

    /// Builds a distribution from (token, logprob) pairs as reported on the
    /// wire. Probabilities are the exponentials of the log-probabilities;
    /// duplicate token texts have their mass summed; zero-mass entries are
    /// dropped.
    pub fn from_logprobs<I, S>(pairs: I, source: DistributionSource) -> Result<Self, QueryError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries: BTreeMap<String, f64> = BTreeMap::new();
        for (token, logprob) in pairs {
            let p = logprob.exp();
            if p > 0.0 {
                *entries.entry(token.into()).or_insert(0.0) += p;
            }
        }
        Self::new(entries, source)
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn source(&self) -> DistributionSource {
        self.source
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    pub(crate) fn with_source(mut self, source: DistributionSource) -> Self {
        self.source = source;
        self
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("network error after retries exhausted: {0}")]
    Network(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("backend returned no token alternatives")]
    LogprobsUnsupported,
    #[error("no record for fingerprint {0}")]
    CacheMiss(String),
    #[error("cache storage error: {0}")]
    Storage(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("mock backend has no answer for this prompt")]
    NoMockAnswer,
}

impl QueryError {
    /// Whether another attempt could help.
    pub fn is_retryable(&self) -> bool {
        match self {
            QueryError::Network(_) => true,
            QueryError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A source of first-token distributions for prompts.
pub trait Backend: Send + Sync {
    /// Alternatives and probabilities reported for the first generated token.
    fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError>;
}

/// Wraps a backend with a persistent cache: hits skip the inner backend,
/// misses are queried and recorded. This is what makes interrupted runs
/// resumable.
pub struct CachingBackend<'a, B: Backend> {
    inner: B,
    cache: &'a QueryCache,
    config: BackendConfig,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<'a, B: Backend> CachingBackend<'a, B> {
    pub fn new(inner: B, cache: &'a QueryCache, config: BackendConfig) -> Self {
        Self {
            inner,
            cache,
            config,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<B: Backend> Backend for CachingBackend<'_, B> {
    fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
        let fp = self.config.fingerprint(prompt);
        if let Some(record) = self.cache.lookup(&fp) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(record.distribution.with_source(DistributionSource::Replay));
        }
        let distribution = self.inner.query_first_token(prompt)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.cache.record(&self.config, prompt, &distribution)?;
        Ok(distribution)
    }
}

/// Runs every prompt against the backend with bounded concurrency.
///
/// Results keep input order regardless of completion order, and failures
/// surface per item rather than aborting the batch.
pub fn run_batch<B: Backend>(
    backend: &B,
    prompts: &[String],
    parallelism: usize,
) -> Vec<Result<TokenDistribution, QueryError>> {
    let workers = parallelism.clamp(1, prompts.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TokenDistribution, QueryError>>>> =
        Mutex::new((0..prompts.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= prompts.len() {
                    break;
                }
                let result = backend.query_first_token(&prompts[i]);
                results.lock().expect("results lock")[i] = Some(result);
            });
        }
    });

    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|slot| slot.expect("every prompt visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, f64)]) -> TokenDistribution {
        TokenDistribution::new(
            pairs.iter().map(|(t, p)| (t.to_string(), *p)).collect(),
            DistributionSource::Mock,
        )
        .unwrap()
    }

    #[test]
    fn distribution_rejects_bad_probabilities() {
        let out_of_range = TokenDistribution::new(
            [("7".to_string(), 1.5)].into_iter().collect(),
            DistributionSource::Mock,
        );
        assert!(matches!(
            out_of_range,
            Err(QueryError::InvalidDistribution(_))
        ));

        let zero = TokenDistribution::new(
            [("7".to_string(), 0.0)].into_iter().collect(),
            DistributionSource::Mock,
        );
        assert!(matches!(zero, Err(QueryError::InvalidDistribution(_))));

        let excess = TokenDistribution::new(
            [("7".to_string(), 0.8), ("8".to_string(), 0.3)]
                .into_iter()
                .collect(),
            DistributionSource::Mock,
        );
        assert!(matches!(excess, Err(QueryError::InvalidDistribution(_))));
    }

    #[test]
    fn from_logprobs_merges_duplicates_and_drops_zero_mass() {
        let d = TokenDistribution::from_logprobs(
            vec![
                ("7", (0.4f64).ln()),
                ("7", (0.2f64).ln()),
                ("8", (0.3f64).ln()),
                ("x", f64::NEG_INFINITY),
            ],
            DistributionSource::Live,
        )
        .unwrap();
        assert_eq!(d.entries().len(), 2);
        assert!((d.entries()["7"] - 0.6).abs() < 1e-12);
        assert!(!d.entries().contains_key("x"));
    }

    #[test]
    fn fingerprints_differ_on_any_input_change() {
        let base = fingerprint("m", "prompt", 0.0, 10);
        assert_ne!(base, fingerprint("m", "prompt!", 0.0, 10));
        assert_ne!(base, fingerprint("m2", "prompt", 0.0, 10));
        assert_ne!(base, fingerprint("m", "prompt", 0.5, 10));
        assert_ne!(base, fingerprint("m", "prompt", 0.0, 11));
        // Field boundaries matter: shifting a character between model and
        // prompt must change the hash.
        assert_ne!(
            fingerprint("ab", "c", 0.0, 10),
            fingerprint("a", "bc", 0.0, 10)
        );
    }

    #[test]
    fn fingerprint_golden_value_is_stable() {
        // Frozen so cache files stay valid across releases.
        assert_eq!(
            fingerprint("gpt-4o", "How concrete is word \u{201c}bicycle\u{201d}?", 0.0, 10),
            "bfcc67d1c13ab13a4e240a55d38c70767eac6646868803146c5cba5ecb67c908"
        );
    }

    #[test]
    fn run_batch_preserves_order_and_isolates_failures() {
        struct Flaky;
        impl Backend for Flaky {
            fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
                if prompt == "bad" {
                    Err(QueryError::LogprobsUnsupported)
                } else {
                    TokenDistribution::new(
                        [(prompt.to_string(), 1.0)].into_iter().collect(),
                        DistributionSource::Mock,
                    )
                }
            }
        }
        let prompts: Vec<String> = ["a", "bad", "c"].iter().map(|s| s.to_string()).collect();
        let results = run_batch(&Flaky, &prompts, 8);
        assert_eq!(results.len(), 3);
        assert_eq!(results[0].as_ref().unwrap().entries().keys().next().unwrap(), "a");
        assert!(matches!(results[1], Err(QueryError::LogprobsUnsupported)));
        assert_eq!(results[2].as_ref().unwrap().entries().keys().next().unwrap(), "c");
    }

    #[test]
    fn run_batch_empty_input() {
        struct Never;
        impl Backend for Never {
            fn query_first_token(&self, _: &str) -> Result<TokenDistribution, QueryError> {
                unreachable!("no prompts to run")
            }
        }
        assert!(run_batch(&Never, &[], 4).is_empty());
    }

    #[test]
    fn retryability_classification() {
        assert!(QueryError::Network("down".into()).is_retryable());
        assert!(QueryError::Http {
            status: 503,
            body: String::new()
        }
        .is_retryable());
        assert!(QueryError::Http {
            status: 429,
            body: String::new()
        }
        .is_retryable());
        assert!(!QueryError::Http {
            status: 400,
            body: String::new()
        }
        .is_retryable());
        assert!(!QueryError::LogprobsUnsupported.is_retryable());
        assert!(!QueryError::CacheMiss("x".into()).is_retryable());
    }

    #[test]
    fn total_mass_reports_sum() {
        let d = dist(&[("4", 0.51), ("5", 0.49)]);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }
}
