//! Event template: framing each event's type text and time tokens with
//! structural tokens, and parsing such streams back.
//!
//! With the default type-time order an event renders as
//!
//! ```text
//! <|begin_of_event|> <|type_prefix|> {type text} <|time_prefix|> {time tokens} <|end_of_event|>
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::EventSequence;
use crate::error::{Error, Result};
use crate::tokenizer::TokenizerSpec;

pub const BEGIN_OF_EVENT: &str = "<|begin_of_event|>";
pub const END_OF_EVENT: &str = "<|end_of_event|>";
pub const TYPE_PREFIX: &str = "<|type_prefix|>";
pub const TIME_PREFIX: &str = "<|time_prefix|>";

/// Structural tokens in manifest order.
pub const STRUCTURAL_TOKENS: [&str; 4] = [BEGIN_OF_EVENT, TYPE_PREFIX, TIME_PREFIX, END_OF_EVENT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateOrder {
    #[default]
    TypeTime,
    TimeType,
}

impl fmt::Display for TemplateOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateOrder::TypeTime => "type-time",
            TemplateOrder::TimeType => "time-type",
        })
    }
}

impl FromStr for TemplateOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "type-time" => Ok(TemplateOrder::TypeTime),
            "time-type" => Ok(TemplateOrder::TimeType),
            other => Err(Error::InvalidParameter(format!("unknown template order `{other}`"))),
        }
    }
}

pub fn render_event(type_text: &str, time_tokens: &[String], order: TemplateOrder) -> Vec<String> {
    let mut out = Vec::with_capacity(time_tokens.len() + 5);
    out.push(BEGIN_OF_EVENT.to_string());
    let type_block = |out: &mut Vec<String>| {
        out.push(TYPE_PREFIX.to_string());
        out.push(type_text.to_string());
    };
    let time_block = |out: &mut Vec<String>| {
        out.push(TIME_PREFIX.to_string());
        out.extend(time_tokens.iter().cloned());
    };
    match order {
        TemplateOrder::TypeTime => {
            type_block(&mut out);
            time_block(&mut out);
        }
        TemplateOrder::TimeType => {
            time_block(&mut out);
            type_block(&mut out);
        }
    }
    out.push(END_OF_EVENT.to_string());
    out
}

pub fn render_sequence(seq: &EventSequence, spec: &TokenizerSpec, order: TemplateOrder) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, (event, value)) in seq.events().iter().zip(spec.inputs(seq)).enumerate() {
        let time = spec.encode_value(value).map_err(|e| e.at_event(i))?;
        out.extend(render_event(&event.type_text, &time, order));
    }
    Ok(out)
}

/// One event recovered from a token stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvent {
    pub type_text: String,
    /// Decoded value in the strategy's input domain.
    pub time: f64,
}

fn is_structural(tok: &str) -> bool {
    STRUCTURAL_TOKENS.contains(&tok)
}

struct Cursor<'a> {
    stream: &'a [String],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn expect(&mut self, want: &str) -> Result<()> {
        match self.stream.get(self.pos) {
            Some(tok) if tok == want => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(self.error(format!("expected {want}, found `{tok}`"))),
            None => Err(self.error(format!("stream ended, expected {want}"))),
        }
    }

    fn error(&self, message: String) -> Error {
        Error::Grammar {
            offset: self.pos,
            message,
        }
    }

    /// Type fragments up to (not including) the next structural token.
    fn type_text(&mut self) -> Result<String> {
        let start = self.pos;
        while self.pos < self.stream.len() && !is_structural(&self.stream[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("empty event type".into()));
        }
        Ok(self.stream[start..self.pos].concat())
    }

    fn time(&mut self, spec: &TokenizerSpec) -> Result<f64> {
        let arity = spec.payload_len();
        let start = self.pos;
        let end = start + arity;
        if end > self.stream.len() {
            self.pos = self.stream.len();
            return Err(self.error(format!(
                "truncated time payload: expected {arity} tokens, found {}",
                self.stream.len() - start
            )));
        }
        if let Some(k) = self.stream[start..end].iter().position(|t| is_structural(t)) {
            self.pos = start + k;
            return Err(self.error(format!("time payload has {k} tokens, expected {arity}")));
        }
        let value = spec.decode_value(&self.stream[start..end]).map_err(|e| Error::Grammar {
            offset: start,
            message: e.to_string(),
        })?;
        self.pos = end;
        Ok(value)
    }
}

/// Inverse of [`render_sequence`]. Type fragments between prefixes are
/// concatenated, so host-tokenizer splits of the type text are accepted.
pub fn parse_stream(stream: &[String], spec: &TokenizerSpec, order: TemplateOrder) -> Result<Vec<ParsedEvent>> {
    let mut cur = Cursor { stream, pos: 0 };
    let mut events = Vec::new();
    while cur.pos < stream.len() {
        cur.expect(BEGIN_OF_EVENT)?;
        let (type_text, time) = match order {
            TemplateOrder::TypeTime => {
                cur.expect(TYPE_PREFIX)?;
                let t = cur.type_text()?;
                cur.expect(TIME_PREFIX)?;
                (t, cur.time(spec)?)
            }
            TemplateOrder::TimeType => {
                cur.expect(TIME_PREFIX)?;
                let v = cur.time(spec)?;
                cur.expect(TYPE_PREFIX)?;
                (cur.type_text()?, v)
            }
        };
        cur.expect(END_OF_EVENT)?;
        events.push(ParsedEvent { type_text, time });
    }
    Ok(events)
}

#[derive(Serialize, Deserialize)]
struct StreamLine {
    tokens: Vec<String>,
}

/// Writes one `{"tokens": [...]}` line per stream.
pub fn write_token_streams<'a>(streams: impl IntoIterator<Item = &'a Vec<String>>, mut out: impl Write) -> Result<()> {
    for tokens in streams {
        serde_json::to_writer(&mut out, &serde_json::json!({ "tokens": tokens }))
            .map_err(|e| Error::Internal(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_token_streams(reader: impl BufRead) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: StreamLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(parsed.tokens);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::quant::BinSpec;
    use crate::dataset::{Event, TimeUnit};
    use crate::tokenizer::Strategy;
    use crate::transforms::Scale;

    fn s(list: &[&str]) -> Vec<String> {
        list.iter().map(|x| x.to_string()).collect()
    }

    fn bin_spec() -> TokenizerSpec {
        TokenizerSpec::new(
            Strategy::ScaleBin(BinSpec::new(Scale::Linear, 4, 0.0, 4.0).unwrap()),
            TimeUnit::Hour,
        )
        .unwrap()
    }

    #[test]
    fn render_orders() {
        let time = s(&["<|bin_000|>"]);
        assert_eq!(
            render_event("A", &time, TemplateOrder::TypeTime),
            s(&[BEGIN_OF_EVENT, TYPE_PREFIX, "A", TIME_PREFIX, "<|bin_000|>", END_OF_EVENT])
        );
        assert_eq!(
            render_event("A", &time, TemplateOrder::TimeType),
            s(&[BEGIN_OF_EVENT, TIME_PREFIX, "<|bin_000|>", TYPE_PREFIX, "A", END_OF_EVENT])
        );
    }

    #[test]
    fn single_event_bin_stream_has_six_tokens() {
        let seq = EventSequence::new(vec![Event::new("A", 0, 0.0)]).unwrap();
        let stream = render_sequence(&seq, &bin_spec(), TemplateOrder::TypeTime).unwrap();
        assert_eq!(stream.len(), 6);
    }

    #[test]
    fn parse_round_trip_both_orders() {
        let seq = EventSequence::new(vec![
            Event::new("Guru", 0, 0.0),
            Event::new("Good Answer", 10, 2.2),
        ])
        .unwrap();
        for order in [TemplateOrder::TypeTime, TemplateOrder::TimeType] {
            let stream = render_sequence(&seq, &bin_spec(), order).unwrap();
            let parsed = parse_stream(&stream, &bin_spec(), order).unwrap();
            assert_eq!(parsed.len(), 2);
            assert_eq!(parsed[1].type_text, "Good Answer");
            assert_eq!(parsed[1].time, 2.5);
        }
    }

    #[test]
    fn fragments_concatenate() {
        let stream = s(&[BEGIN_OF_EVENT, TYPE_PREFIX, "G", "uru", TIME_PREFIX, "<|bin_001|>", END_OF_EVENT]);
        let parsed = parse_stream(&stream, &bin_spec(), TemplateOrder::TypeTime).unwrap();
        assert_eq!(parsed[0].type_text, "Guru");
    }

    #[test]
    fn grammar_errors() {
        let spec = bin_spec();
        assert!(parse_stream(&[], &spec, TemplateOrder::TypeTime).unwrap().is_empty());

        let missing_end = s(&[BEGIN_OF_EVENT, TYPE_PREFIX, "A", TIME_PREFIX, "<|bin_000|>"]);
        match parse_stream(&missing_end, &spec, TemplateOrder::TypeTime) {
            Err(Error::Grammar { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }

        let no_prefix = s(&[BEGIN_OF_EVENT, "A", TIME_PREFIX, "<|bin_000|>", END_OF_EVENT]);
        assert!(matches!(
            parse_stream(&no_prefix, &spec, TemplateOrder::TypeTime),
            Err(Error::Grammar { offset: 1, .. })
        ));

        let empty_time = s(&[BEGIN_OF_EVENT, TYPE_PREFIX, "A", TIME_PREFIX, END_OF_EVENT]);
        assert!(matches!(
            parse_stream(&empty_time, &spec, TemplateOrder::TypeTime),
            Err(Error::Grammar { offset: 4, .. })
        ));

        let bad_token = s(&[BEGIN_OF_EVENT, TYPE_PREFIX, "A", TIME_PREFIX, "<|bin_009|>", END_OF_EVENT]);
        assert!(matches!(
            parse_stream(&bad_token, &spec, TemplateOrder::TypeTime),
            Err(Error::Grammar { offset: 4, .. })
        ));
    }

    #[test]
    fn stream_file_round_trip() {
        let streams = vec![s(&["a", "b"]), s(&["<|bin_000|>"])];
        let mut buf = Vec::new();
        write_token_streams(&streams, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().next().unwrap(), r#"{"tokens":["a","b"]}"#);
        assert_eq!(read_token_streams(buf.as_slice()).unwrap(), streams);
    }

    #[test]
    fn order_parsing() {
        assert_eq!("type-time".parse::<TemplateOrder>().unwrap(), TemplateOrder::TypeTime);
        assert_eq!("time_type".parse::<TemplateOrder>().unwrap(), TemplateOrder::TimeType);
        assert!("sideways".parse::<TemplateOrder>().is_err());
    }
}
