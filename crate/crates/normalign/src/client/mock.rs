//! Deterministic in-memory backend for tests and dry runs.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{Backend, DistributionSource, QueryError, TokenDistribution};

/// Answers from a fixed prompt-to-distribution table, or with one constant
/// answer for every prompt.
pub struct MockBackend {
    answers: HashMap<String, TokenDistribution>,
    fallback: Option<TokenDistribution>,
    /// Per-prompt failure budget: fail this many calls before succeeding.
    failures_remaining: Mutex<HashMap<String, u32>>,
    calls: Mutex<u64>,
}

impl MockBackend {
    /// Every prompt gets the same single-token answer with probability 1.
    pub fn constant(token: &str) -> Self {
        let d = TokenDistribution::new(
            [(token.to_string(), 1.0)].into_iter().collect(),
            DistributionSource::Mock,
        )
        .expect("point mass is valid");
        Self {
            answers: HashMap::new(),
            fallback: Some(d),
            failures_remaining: Mutex::new(HashMap::new()),
            calls: Mutex::new(0),
        }
    }

    /// Specific answers per prompt; unknown prompts fail.
    pub fn with_responses(answers: HashMap<String, TokenDistribution>) -> Self {
        Self {
            answers,
            fallback: None,
            failures_remaining: Mutex::new(HashMap::new()),
            calls: Mutex::new(0),
        }
    }

    /// Makes the next `n` calls for `prompt` fail with a retryable error.
    pub fn fail_first(mut self, prompt: &str, n: u32) -> Self {
        self.failures_remaining
            .get_mut()
            .expect("failures lock")
            .insert(prompt.to_string(), n);
        self
    }

    pub fn calls(&self) -> u64 {
        *self.calls.lock().expect("calls lock")
    }
}

impl Backend for MockBackend {
    fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
        *self.calls.lock().expect("calls lock") += 1;
        {
            let mut failures = self.failures_remaining.lock().expect("failures lock");
            if let Some(n) = failures.get_mut(prompt) {
                if *n > 0 {
                    *n -= 1;
                    return Err(QueryError::Network("mock failure".to_string()));
                }
            }
        }
        if let Some(d) = self.answers.get(prompt) {
            return Ok(d.clone());
        }
        match &self.fallback {
            Some(d) => Ok(d.clone()),
            None => Err(QueryError::NoMockAnswer),
        }
    }
}
