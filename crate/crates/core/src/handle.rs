//! A loaded, immutable tokenizer with a string-in/string-out surface, meant
//! for embedding in training pipelines and language bindings.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::dataset::{Event, EventSequence, TimeUnit};
use crate::error::{Error, Result};
use crate::manifest::build_manifest;
use crate::template::{render_sequence, TemplateOrder};
use crate::tokenizer::{load_spec, StrategyKind, TokenizerSpec};

#[derive(Debug, Clone)]
pub struct Tokenizer {
    spec: Arc<TokenizerSpec>,
}

#[derive(Deserialize)]
struct SequenceJson {
    type_text: Vec<String>,
    timestamp: Vec<i64>,
    interval: Vec<f64>,
}

impl Tokenizer {
    pub fn new(spec: TokenizerSpec) -> Self {
        Self { spec: Arc::new(spec) }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(load_spec(path)?))
    }

    pub fn spec(&self) -> &TokenizerSpec {
        &self.spec
    }

    pub fn strategy(&self) -> StrategyKind {
        self.spec.kind()
    }

    pub fn unit(&self) -> TimeUnit {
        self.spec.unit
    }

    pub fn encode_value(&self, v: f64) -> Result<Vec<String>> {
        self.spec.encode_value(v)
    }

    pub fn decode_value(&self, tokens: &[String]) -> Result<f64> {
        self.spec.decode_value(tokens)
    }

    /// Renders one sequence given as a JSON object with `type_text`,
    /// `timestamp` and `interval` arrays (the dataset line format, `split`
    /// optional), using the type-time template.
    pub fn render_sequence_json(&self, json: &str) -> Result<Vec<String>> {
        let raw: SequenceJson = serde_json::from_str(json).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if raw.type_text.len() != raw.timestamp.len() || raw.type_text.len() != raw.interval.len() {
            return Err(Error::Validation {
                line: 1,
                field: "interval",
                message: "array lengths differ".into(),
            });
        }
        let events = raw
            .type_text
            .into_iter()
            .zip(raw.timestamp)
            .zip(raw.interval)
            .map(|((t, ts), iv)| Event::new(t, ts, iv))
            .collect();
        render_sequence(&EventSequence::new(events)?, &self.spec, TemplateOrder::TypeTime)
    }

    pub fn vocab(&self) -> Result<Vec<String>> {
        Ok(build_manifest(&self.spec)?.tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{save_spec, Strategy};

    #[test]
    fn byte_handle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("byte.json");
        save_spec(&TokenizerSpec::new(Strategy::Byte {}, TimeUnit::Month).unwrap(), &path).unwrap();
        let tok = Tokenizer::load(&path).unwrap();
        assert_eq!(tok.encode_value(0.0).unwrap(), vec!["<|byte_000|>"; 4]);
        assert_eq!(tok.vocab().unwrap().len(), 260);
        let stream = tok
            .render_sequence_json(r#"{"type_text":["Guru"],"timestamp":[1642042328],"interval":[0.0]}"#)
            .unwrap();
        assert_eq!(stream.len(), 9);
    }

    #[test]
    fn corrupted_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("byte.json");
        save_spec(&TokenizerSpec::new(Strategy::Byte {}, TimeUnit::Month).unwrap(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replace("month", "week");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Tokenizer::load(&path), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn handle_is_shareable() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Tokenizer>();
    }
}
