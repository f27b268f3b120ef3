//! Text generation backends.
//!
//! Every backend implements [`GeneratorBackend`]: a prompt goes in, a token
//! sequence ending in exactly one `<eos>` comes out. Two deterministic
//! baselines ship with the crate ([`NgramModel`] and [`RetrievalIndex`]);
//! anything else (a neural seq2seq model, say) plugs in over the JSONL wire
//! protocol in [`wire`].

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod ngram;
pub mod registry;
pub mod retrieval;
pub mod wire;

pub use ngram::{ngram_score, train_ngram, NgramModel, SequenceScorer};
pub use registry::BackendSpec;
pub use retrieval::{build_retrieval_index, RetrievalIndex};
pub use wire::{call_external_backend, serve_backend, Endpoint, ExternalBackend, ExternalTagger};

use crate::corpus::EOS;

pub const DEFAULT_MAX_TOKENS: usize = 60;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("training split is empty")]
    EmptyCorpus,
    #[error("retrieval index is empty")]
    EmptyIndex,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend did not answer within {0:?}")]
    Timeout(Duration),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend exited: {0}")]
    BackendExit(String),
    #[error("backend reported: {0}")]
    Backend(String),
    #[error("cannot load backend: {0}")]
    Load(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: Vec<String>,
    pub max_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl GenerationRequest {
    pub fn new(prompt: Vec<String>) -> Self {
        GenerationRequest { prompt, max_tokens: DEFAULT_MAX_TOKENS, temperature: 1.0, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.prompt.is_empty() {
            return Err(GenerationError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(GenerationError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GenerationError::InvalidRequest(format!("bad temperature {}", self.temperature)));
        }
        Ok(())
    }
}

/// Anything that can answer a prompt.
pub trait GeneratorBackend: Send + Sync {
    /// The response, ending with exactly one `<eos>`.
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError>;

    /// Whether identical requests always yield identical responses.
    fn is_deterministic(&self) -> bool {
        true
    }
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for std::sync::Arc<B> {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        (**self).generate(req)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<B: GeneratorBackend + ?Sized> GeneratorBackend for Box<B> {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        (**self).generate(req)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// Cuts `tokens` at the first `<eos>`, keeps at most `max_tokens` of what
/// precedes it, and appends a single `<eos>`.
pub fn finish_response(mut tokens: Vec<String>, max_tokens: usize) -> Vec<String> {
    if let Some(end) = tokens.iter().position(|t| t == EOS) {
        tokens.truncate(end);
    }
    tokens.truncate(max_tokens);
    tokens.push(EOS.to_string());
    tokens
}

/// Returns the prompt as the response.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl GeneratorBackend for EchoBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        req.validate()?;
        Ok(finish_response(req.prompt.clone(), req.max_tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn eos_guarantee() {
        assert_eq!(finish_response(v(&["a", "b"]), 10), v(&["a", "b", EOS]));
        assert_eq!(finish_response(v(&["a", EOS, "b", EOS]), 10), v(&["a", EOS]));
        assert_eq!(finish_response(v(&["a", "b", "c"]), 1), v(&["a", EOS]));
        assert_eq!(finish_response(vec![], 3), v(&[EOS]));
    }

    #[test]
    fn echo() {
        let out = EchoBackend.generate(&GenerationRequest::new(v(&["hi", "."]))).unwrap();
        assert_eq!(out, v(&["hi", ".", EOS]));
    }

    #[test]
    fn request_validation() {
        assert!(GenerationRequest::new(vec![]).validate().is_err());
        assert!(GenerationRequest::new(v(&["x"])).with_max_tokens(0).validate().is_err());
        assert!(GenerationRequest::new(v(&["x"])).with_temperature(-1.0).validate().is_err());
        assert!(GenerationRequest::new(v(&["x"])).with_temperature(f64::NAN).validate().is_err());
        assert!(GenerationRequest::new(v(&["x"])).with_temperature(0.0).validate().is_ok());
    }
}
