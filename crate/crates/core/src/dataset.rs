//! Event sequences, JSONL dataset ingestion and split statistics.
//!
//! A dataset file holds one sequence per line:
//!
//! ```text
//! {"split": "train", "type_text": ["A", "B"], "timestamp": [1000, 1360], "interval": [0.0, 0.1]}
//! ```
//!
//! `interval` is expressed in the dataset's [`TimeUnit`], which is supplied
//! by the caller and never inferred from the file.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::template::STRUCTURAL_TOKENS;

/// Unit in which a dataset's pre-computed intervals are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Second,
    Hour,
    Day,
    Week,
    /// Fixed 30-day month.
    Month,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 5] = [
        TimeUnit::Second,
        TimeUnit::Hour,
        TimeUnit::Day,
        TimeUnit::Week,
        TimeUnit::Month,
    ];

    pub fn seconds_per_unit(self) -> f64 {
        match self {
            TimeUnit::Second => 1.0,
            TimeUnit::Hour => 3_600.0,
            TimeUnit::Day => 86_400.0,
            TimeUnit::Week => 604_800.0,
            TimeUnit::Month => 2_592_000.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Second => "second",
            TimeUnit::Hour => "hour",
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
            TimeUnit::Month => "month",
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "second" | "seconds" | "s" => Ok(TimeUnit::Second),
            "hour" | "hours" | "h" => Ok(TimeUnit::Hour),
            "day" | "days" | "d" => Ok(TimeUnit::Day),
            "week" | "weeks" | "w" => Ok(TimeUnit::Week),
            "month" | "months" => Ok(TimeUnit::Month),
            other => Err(Error::InvalidParameter(format!("unknown time unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub type_text: String,
    /// Unix epoch seconds, UTC.
    pub timestamp_s: i64,
    /// Gap to the previous event in dataset units; 0 for the first event.
    pub interval_units: f64,
}

impl Event {
    pub fn new(type_text: impl Into<String>, timestamp_s: i64, interval_units: f64) -> Self {
        Self {
            type_text: type_text.into(),
            timestamp_s,
            interval_units,
        }
    }
}

/// A validated, non-empty, time-ordered list of events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    events: Vec<Event>,
}

/// Which invariant a candidate sequence broke.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceViolation {
    pub field: &'static str,
    pub message: String,
}

impl EventSequence {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        Self::check(&events).map_err(|v| Error::Validation {
            line: 0,
            field: v.field,
            message: v.message,
        })?;
        Ok(Self { events })
    }

    fn check(events: &[Event]) -> std::result::Result<(), SequenceViolation> {
        let violation = |field, message: String| Err(SequenceViolation { field, message });
        if events.is_empty() {
            return violation("type_text", "sequence has no events".into());
        }
        for (i, ev) in events.iter().enumerate() {
            if ev.type_text.is_empty() {
                return violation("type_text", format!("event {i} has an empty type"));
            }
            if STRUCTURAL_TOKENS.contains(&ev.type_text.as_str()) {
                return violation(
                    "type_text",
                    format!("event {i} type `{}` is a reserved template token", ev.type_text),
                );
            }
            if !ev.interval_units.is_finite() || ev.interval_units < 0.0 {
                return violation(
                    "interval",
                    format!("event {i} interval {} is negative or non-finite", ev.interval_units),
                );
            }
            if i > 0 && ev.timestamp_s < events[i - 1].timestamp_s {
                return violation(
                    "timestamp",
                    format!(
                        "event {i} timestamp {} precedes {}",
                        ev.timestamp_s,
                        events[i - 1].timestamp_s
                    ),
                );
            }
        }
        if events[0].interval_units != 0.0 {
            return violation(
                "interval",
                format!("first interval must be 0, got {}", events[0].interval_units),
            );
        }
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.interval_units)
    }

    /// Timestamp differences in seconds; the first entry is 0.
    pub fn deltas_s(&self) -> impl Iterator<Item = i64> + '_ {
        let mut prev = self.events[0].timestamp_s;
        self.events.iter().map(move |e| {
            let d = e.timestamp_s - prev;
            prev = e.timestamp_s;
            d
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" | "dev" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParameter(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub unit: TimeUnit,
    pub train: Vec<EventSequence>,
    pub val: Vec<EventSequence>,
    pub test: Vec<EventSequence>,
}

impl Dataset {
    pub fn empty(name: impl Into<String>, unit: TimeUnit) -> Self {
        Self {
            name: name.into(),
            unit,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    pub fn split(&self, split: Split) -> &[EventSequence] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn split_mut(&mut self, split: Split) -> &mut Vec<EventSequence> {
        match split {
            Split::Train => &mut self.train,
            Split::Val => &mut self.val,
            Split::Test => &mut self.test,
        }
    }

    /// All sequences in train, val, test order.
    pub fn sequences(&self) -> impl Iterator<Item = (Split, &EventSequence)> {
        self.train
            .iter()
            .map(|s| (Split::Train, s))
            .chain(self.val.iter().map(|s| (Split::Val, s)))
            .chain(self.test.iter().map(|s| (Split::Test, s)))
    }

    /// Fitting workflows need every split populated.
    pub fn require_all_splits(&self) -> Result<()> {
        for split in [Split::Train, Split::Val, Split::Test] {
            if self.split(split).is_empty() {
                return Err(Error::EmptyInput(match split {
                    Split::Train => "train split",
                    Split::Val => "val split",
                    Split::Test => "test split",
                }));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawLine {
    split: Option<String>,
    type_text: Option<Vec<String>>,
    timestamp: Option<Vec<i64>>,
    interval: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct RawLineOut<'a> {
    split: &'a str,
    type_text: Vec<&'a str>,
    timestamp: Vec<i64>,
    interval: Vec<f64>,
}

pub fn load_dataset(path: impl AsRef<Path>, unit: TimeUnit) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let file = std::fs::File::open(path)?;
    parse_dataset(BufReader::new(file), name, unit)
}

/// Parses JSONL from any reader. Line numbers in errors are 1-based.
pub fn parse_dataset(reader: impl BufRead, name: impl Into<String>, unit: TimeUnit) -> Result<Dataset> {
    let mut dataset = Dataset::empty(name, unit);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let missing = |field| Error::MissingField { line: line_no, field };
        let split_text = raw.split.ok_or_else(|| missing("split"))?;
        let types = raw.type_text.ok_or_else(|| missing("type_text"))?;
        let stamps = raw.timestamp.ok_or_else(|| missing("timestamp"))?;
        let intervals = raw.interval.ok_or_else(|| missing("interval"))?;

        let split: Split = split_text.parse().map_err(|_| Error::Validation {
            line: line_no,
            field: "split",
            message: format!("unknown split `{split_text}`"),
        })?;
        if types.len() != stamps.len() || types.len() != intervals.len() {
            return Err(Error::Validation {
                line: line_no,
                field: "interval",
                message: format!(
                    "array lengths differ: type_text {}, timestamp {}, interval {}",
                    types.len(),
                    stamps.len(),
                    intervals.len()
                ),
            });
        }
        let events: Vec<Event> = types
            .into_iter()
            .zip(stamps)
            .zip(intervals)
            .map(|((t, ts), iv)| Event::new(t, ts, iv))
            .collect();
        EventSequence::check(&events).map_err(|v| Error::Validation {
            line: line_no,
            field: v.field,
            message: v.message,
        })?;
        dataset.split_mut(split).push(EventSequence { events });
    }
    Ok(dataset)
}

/// Writes the dataset back as JSONL (train, val, test order). Floats use the
/// shortest representation that round-trips exactly.
pub fn write_dataset(dataset: &Dataset, mut out: impl Write) -> Result<()> {
    for (split, seq) in dataset.sequences() {
        let line = RawLineOut {
            split: split.as_str(),
            type_text: seq.events.iter().map(|e| e.type_text.as_str()).collect(),
            timestamp: seq.events.iter().map(|e| e.timestamp_s).collect(),
            interval: seq.intervals().collect(),
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Internal(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(dataset, &mut file)?;
    file.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub n_types: usize,
    pub n_events: usize,
    pub n_seqs: usize,
    /// (train, val, test) sequence counts.
    pub split_sizes: (usize, usize, usize),
    pub avg_seq_len: f64,
}

pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    let mut types = HashSet::new();
    let mut n_events = 0;
    for (_, seq) in d.sequences() {
        n_events += seq.len();
        types.extend(seq.events.iter().map(|e| e.type_text.as_str()));
    }
    let split_sizes = (d.train.len(), d.val.len(), d.test.len());
    let n_seqs = split_sizes.0 + split_sizes.1 + split_sizes.2;
    let avg_seq_len = if n_seqs == 0 {
        log::warn!("dataset `{}` has no sequences; average length reported as 0", d.name);
        0.0
    } else {
        n_events as f64 / n_seqs as f64
    };
    DatasetStats {
        n_types: types.len(),
        n_events,
        n_seqs,
        split_sizes,
        avg_seq_len,
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "event types      {}", self.n_types)?;
        writeln!(f, "events           {}", self.n_events)?;
        writeln!(f, "sequences        {}", self.n_seqs)?;
        writeln!(
            f,
            "train/val/test   {}/{}/{}",
            self.split_sizes.0, self.split_sizes.1, self.split_sizes.2
        )?;
        write!(f, "avg seq length   {:.2}", self.avg_seq_len)
    }
}

/// An interval that disagrees with the timestamp difference it should describe.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyWarning {
    pub index: usize,
    pub interval_units: f64,
    pub timestamp_delta_s: i64,
    /// Absolute disagreement, in seconds.
    pub mismatch_s: f64,
}

impl fmt::Display for ConsistencyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event {}: interval {} disagrees with timestamp delta {} s by {:.3} s",
            self.index, self.interval_units, self.timestamp_delta_s, self.mismatch_s
        )
    }
}

/// Cross-checks each interval against the timestamp difference. `tol` is in
/// dataset units.
pub fn validate_consistency(seq: &EventSequence, unit: TimeUnit, tol: f64) -> Vec<ConsistencyWarning> {
    let spu = unit.seconds_per_unit();
    seq.events
        .windows(2)
        .enumerate()
        .filter_map(|(i, pair)| {
            let delta = pair[1].timestamp_s - pair[0].timestamp_s;
            let mismatch = (pair[1].interval_units * spu - delta as f64).abs();
            (mismatch > tol * spu).then(|| ConsistencyWarning {
                index: i + 1,
                interval_units: pair[1].interval_units,
                timestamp_delta_s: delta,
                mismatch_s: mismatch,
            })
        })
        .collect()
}
