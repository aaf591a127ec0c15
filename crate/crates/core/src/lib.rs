//! Temporal tokenization for event sequences.
//!
//! Converts continuous event times into short sequences of discrete tokens
//! and back, under five strategy families:
//!
//! - numeric strings with fixed precision,
//! - the four bytes of the single-precision value,
//! - Gregorian calendar fields (absolute instants or relative spans),
//! - uniform bins over a linear or log scale,
//! - residual scalar quantization with exact 1-D k-means codebooks.
//!
//! A strategy is fitted into a [`TokenizerSpec`], which persists as a
//! versioned JSON file, renders event sequences through the event template
//! and lists the special tokens it adds to a language-model vocabulary.
//!
//! ```
//! use tempotok::{Event, EventSequence, StrategyConfig, TemplateOrder, TimeUnit, render_sequence};
//!
//! let seq = EventSequence::new(vec![
//!     Event::new("Guru", 1_642_042_328, 0.0),
//!     Event::new("Good Answer", 1_643_176_596, 0.437_603_563_070_297_24),
//! ])
//! .unwrap();
//! let spec = StrategyConfig::Byte.fit(std::slice::from_ref(&seq), TimeUnit::Month).unwrap();
//! let stream = render_sequence(&seq, &spec, TemplateOrder::TypeTime).unwrap();
//! assert_eq!(stream[13], "<|byte_147|>");
//! ```

pub mod bench;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod handle;
pub mod manifest;
pub mod synthetic;
pub mod template;
pub mod tokenizer;
pub mod transforms;

pub use codec::calendar::{CivilTime, Resolution};
pub use codec::quant::{BinSpec, Codebook, KMeansEngine, LloydConfig, RsqSpec};
pub use codec::simple::ByteToken;
pub use dataset::{
    dataset_stats, load_dataset, save_dataset, validate_consistency, Dataset, DatasetStats, Event, EventSequence,
    Split, TimeUnit,
};
pub use error::{Error, Result};
pub use handle::Tokenizer;
pub use manifest::{build_manifest, VocabManifest};
pub use template::{parse_stream, render_event, render_sequence, ParsedEvent, TemplateOrder};
pub use tokenizer::{
    load_spec, save_spec, Strategy, StrategyConfig, StrategyKind, TimeInput, TokenCount, TokenizerSpec, FORMAT_VERSION,
};
pub use transforms::{Histogram, Scale};
