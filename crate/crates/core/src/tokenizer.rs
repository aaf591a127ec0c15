//! Fitted tokenizers: strategy configuration, fitting, per-value encode and
//! decode, and the versioned, checksummed JSON spec file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::calendar::{self, civil_from_epoch, Resolution};
use crate::codec::quant::{bin_fit, rsq_fit_with, BinSpec, KMeansEngine, RsqSpec};
use crate::codec::simple::{self, ByteToken};
use crate::dataset::{EventSequence, TimeUnit};
use crate::error::{Error, Result};
use crate::transforms::Scale;

/// Version string written to and required in spec files.
pub const FORMAT_VERSION: &str = "1";

/// Default number of extra years on each side of the training year range.
pub const DEFAULT_YEAR_MARGIN: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Numeric,
    Byte,
    CalAbs,
    CalRel,
    ScaleBin,
    Rsq,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Numeric => "numeric",
            StrategyKind::Byte => "byte",
            StrategyKind::CalAbs => "cal_abs",
            StrategyKind::CalRel => "cal_rel",
            StrategyKind::ScaleBin => "scale_bin",
            StrategyKind::Rsq => "rsq",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "numeric" => Ok(StrategyKind::Numeric),
            "byte" => Ok(StrategyKind::Byte),
            "cal_abs" => Ok(StrategyKind::CalAbs),
            "cal_rel" => Ok(StrategyKind::CalRel),
            "scale_bin" | "bin" => Ok(StrategyKind::ScaleBin),
            "rsq" => Ok(StrategyKind::Rsq),
            other => Err(Error::InvalidParameter(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Strategy together with its fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "params", rename_all = "snake_case")]
pub enum Strategy {
    Numeric {
        precision: u32,
    },
    Byte {},
    CalAbs {
        resolution: Resolution,
        year_lo: i32,
        year_hi: i32,
    },
    CalRel {
        resolution: Resolution,
    },
    ScaleBin(BinSpec),
    Rsq(RsqSpec),
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Numeric { .. } => StrategyKind::Numeric,
            Strategy::Byte {} => StrategyKind::Byte,
            Strategy::CalAbs { .. } => StrategyKind::CalAbs,
            Strategy::CalRel { .. } => StrategyKind::CalRel,
            Strategy::ScaleBin(_) => StrategyKind::ScaleBin,
            Strategy::Rsq(_) => StrategyKind::Rsq,
        }
    }
}

/// Tokens emitted per time value; `estimate` is set when the real count
/// depends on the host tokenizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenCount {
    pub count: usize,
    pub estimate: bool,
}

impl fmt::Display for TokenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.estimate {
            write!(f, "~{}", self.count)
        } else {
            write!(f, "{}", self.count)
        }
    }
}

/// What the codec reads from an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeInput {
    /// Absolute epoch seconds.
    Timestamp,
    /// Timestamp difference to the previous event, in seconds.
    DeltaSeconds,
    /// Pre-computed interval in dataset units.
    Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerSpec {
    pub strategy: Strategy,
    pub unit: TimeUnit,
}

impl TokenizerSpec {
    pub fn new(strategy: Strategy, unit: TimeUnit) -> Result<Self> {
        let spec = Self { strategy, unit };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> StrategyKind {
        self.strategy.kind()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.strategy {
            Strategy::Numeric { precision } if *precision > simple::MAX_PRECISION => Err(
                Error::InvalidParameter(format!("precision {precision} exceeds {}", simple::MAX_PRECISION)),
            ),
            Strategy::CalAbs { year_lo, year_hi, .. } => {
                if year_lo > year_hi || *year_lo < 1900 || *year_hi > 2199 {
                    Err(Error::InvalidParameter(format!(
                        "year range {year_lo}..={year_hi} must lie within 1900..=2199"
                    )))
                } else {
                    Ok(())
                }
            }
            Strategy::ScaleBin(bins) => bins.validate(),
            Strategy::Rsq(rsq) => rsq.validate(),
            _ => Ok(()),
        }
    }

    pub fn input(&self) -> TimeInput {
        match self.strategy {
            Strategy::CalAbs { .. } => TimeInput::Timestamp,
            Strategy::CalRel { .. } => TimeInput::DeltaSeconds,
            _ => TimeInput::Interval,
        }
    }

    /// The codec input for every event of `seq`.
    pub fn inputs(&self, seq: &EventSequence) -> Vec<f64> {
        match self.input() {
            TimeInput::Timestamp => seq.events().iter().map(|e| e.timestamp_s as f64).collect(),
            TimeInput::DeltaSeconds => seq.deltas_s().map(|d| d as f64).collect(),
            TimeInput::Interval => seq.intervals().collect(),
        }
    }

    pub fn tokens_per_value(&self) -> TokenCount {
        let exact = |count| TokenCount {
            count,
            estimate: false,
        };
        match &self.strategy {
            Strategy::Numeric { .. } => TokenCount {
                count: simple::NUMERIC_TOKENS_ESTIMATE,
                estimate: true,
            },
            Strategy::Byte {} => exact(simple::BYTE_TOKENS),
            Strategy::CalAbs { resolution, .. } | Strategy::CalRel { resolution } => {
                exact(resolution.n_fields())
            }
            Strategy::ScaleBin(_) => exact(1),
            Strategy::Rsq(rsq) => exact(rsq.n_levels()),
        }
    }

    /// Number of stream elements a time payload occupies. A numeric string is
    /// a single element here; subword splitting happens downstream.
    pub fn payload_len(&self) -> usize {
        match self.strategy {
            Strategy::Numeric { .. } => 1,
            _ => self.tokens_per_value().count,
        }
    }

    /// Encodes one value given in this strategy's input domain (see [`TimeInput`]).
    pub fn encode_value(&self, v: f64) -> Result<Vec<String>> {
        match &self.strategy {
            Strategy::Numeric { precision } => Ok(vec![simple::encode_numeric(v, *precision)?]),
            Strategy::Byte {} => Ok(simple::encode_bytes(v)?.iter().map(|b| b.literal()).collect()),
            Strategy::CalAbs {
                resolution,
                year_lo,
                year_hi,
            } => {
                if !v.is_finite() {
                    return Err(Error::Domain(format!("timestamp must be finite, got {v}")));
                }
                let t = v.floor() as i64;
                let year = civil_from_epoch(t)?.year;
                if year < *year_lo || year > *year_hi {
                    return Err(Error::Range(format!(
                        "year {year} outside the fitted vocabulary {year_lo}..={year_hi}"
                    )));
                }
                calendar::encode_abs(t, *resolution)
            }
            Strategy::CalRel { resolution } => calendar::encode_rel(v, *resolution),
            Strategy::ScaleBin(bins) => Ok(vec![crate::codec::quant::bin_encode(v, bins)?]),
            Strategy::Rsq(rsq) => crate::codec::quant::rsq_encode(v, rsq),
        }
    }

    pub fn decode_value(&self, tokens: &[String]) -> Result<f64> {
        match &self.strategy {
            Strategy::Numeric { .. } => match tokens {
                [s] => simple::decode_numeric(s),
                _ => Err(Error::Arity {
                    expected: 1,
                    got: tokens.len(),
                }),
            },
            Strategy::Byte {} => {
                let bytes = tokens
                    .iter()
                    .map(|t| ByteToken::parse(t))
                    .collect::<Result<Vec<_>>>()?;
                Ok(simple::decode_bytes(&bytes)? as f64)
            }
            Strategy::CalAbs { resolution, .. } => Ok(calendar::decode_abs(tokens, *resolution)? as f64),
            Strategy::CalRel { resolution } => Ok(calendar::decode_rel(tokens, *resolution)? as f64),
            Strategy::ScaleBin(bins) => match tokens {
                [t] => crate::codec::quant::bin_decode(t, bins),
                _ => Err(Error::Arity {
                    expected: 1,
                    got: tokens.len(),
                }),
            },
            Strategy::Rsq(rsq) => crate::codec::quant::rsq_decode(tokens, rsq),
        }
    }

    /// Short human-readable identifier, e.g. `rsq(log,64x4)`.
    pub fn label(&self) -> String {
        match &self.strategy {
            Strategy::Numeric { precision } => format!("numeric(p={precision})"),
            Strategy::Byte {} => "byte".into(),
            Strategy::CalAbs { resolution, .. } => format!("cal_abs({resolution})"),
            Strategy::CalRel { resolution } => format!("cal_rel({resolution})"),
            Strategy::ScaleBin(b) => format!("scale_bin({},{})", b.scale(), b.k()),
            Strategy::Rsq(r) => format!("rsq({},{})", r.scale, levels_label(&r.level_sizes())),
        }
    }
}

fn levels_label(sizes: &[usize]) -> String {
    if sizes.len() > 1 && sizes.iter().all(|&k| k == sizes[0]) {
        format!("{}x{}", sizes[0], sizes.len())
    } else {
        sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
    }
}

/// An unfitted strategy request.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyConfig {
    Numeric { precision: u32 },
    Byte,
    CalAbs { resolution: Resolution, year_margin: i32 },
    CalRel { resolution: Resolution },
    ScaleBin { scale: Scale, bins: usize },
    Rsq { scale: Scale, levels: Vec<usize>, engine: KMeansEngine },
}

impl StrategyConfig {
    /// The configurations compared in the original experiments.
    pub fn presets() -> Vec<StrategyConfig> {
        use crate::codec::quant::rsq::{PRESET_L1, PRESET_L4};
        let mut out = vec![
            StrategyConfig::Numeric {
                precision: simple::DEFAULT_PRECISION,
            },
            StrategyConfig::Byte,
        ];
        for resolution in [Resolution::Second, Resolution::Day] {
            out.push(StrategyConfig::CalAbs {
                resolution,
                year_margin: DEFAULT_YEAR_MARGIN,
            });
        }
        for resolution in [Resolution::Second, Resolution::Day] {
            out.push(StrategyConfig::CalRel { resolution });
        }
        for scale in [Scale::Linear, Scale::log10()] {
            out.push(StrategyConfig::ScaleBin { scale, bins: 256 });
        }
        for levels in [PRESET_L1, PRESET_L4] {
            for scale in [Scale::Linear, Scale::log10()] {
                out.push(StrategyConfig::Rsq {
                    scale,
                    levels: levels.to_vec(),
                    engine: KMeansEngine::Exact,
                });
            }
        }
        out
    }

    /// Fits on the given (training) sequences.
    pub fn fit(&self, train: &[EventSequence], unit: TimeUnit) -> Result<TokenizerSpec> {
        let intervals = || -> Vec<f64> { train.iter().flat_map(|s| s.intervals()).collect() };
        let strategy = match self {
            StrategyConfig::Numeric { precision } => Strategy::Numeric {
                precision: *precision,
            },
            StrategyConfig::Byte => Strategy::Byte {},
            StrategyConfig::CalAbs {
                resolution,
                year_margin,
            } => {
                if *year_margin < 0 {
                    return Err(Error::InvalidParameter("year margin must be >= 0".into()));
                }
                let mut years = train
                    .iter()
                    .flat_map(|s| s.events().iter())
                    .map(|e| civil_from_epoch(e.timestamp_s).map(|c| c.year));
                let first = years.next().ok_or(Error::EmptyInput("calendar year fit"))??;
                let (mut lo, mut hi) = (first, first);
                for y in years {
                    let y = y?;
                    lo = lo.min(y);
                    hi = hi.max(y);
                }
                Strategy::CalAbs {
                    resolution: *resolution,
                    year_lo: (lo - year_margin).max(1900),
                    year_hi: (hi + year_margin).min(2199),
                }
            }
            StrategyConfig::CalRel { resolution } => Strategy::CalRel {
                resolution: *resolution,
            },
            StrategyConfig::ScaleBin { scale, bins } => Strategy::ScaleBin(bin_fit(&intervals(), *scale, *bins)?),
            StrategyConfig::Rsq {
                scale,
                levels,
                engine,
            } => Strategy::Rsq(rsq_fit_with(&intervals(), *scale, levels, *engine)?.spec),
        };
        TokenizerSpec::new(strategy, unit)
    }
}

#[derive(Serialize)]
struct Body<'a> {
    version: &'a str,
    strategy: StrategyKind,
    unit: TimeUnit,
    params: &'a serde_json::Value,
}

#[derive(Serialize)]
struct FileOut<'a> {
    version: &'a str,
    strategy: StrategyKind,
    unit: TimeUnit,
    params: &'a serde_json::Value,
    checksum: String,
}

fn params_value(strategy: &Strategy) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(strategy).map_err(|e| Error::Internal(e.to_string()))?;
    v.get_mut("params")
        .map(serde_json::Value::take)
        .ok_or_else(|| Error::Internal("strategy serialized without params".into()))
}

fn checksum(kind: StrategyKind, unit: TimeUnit, params: &serde_json::Value) -> Result<String> {
    let body = Body {
        version: FORMAT_VERSION,
        strategy: kind,
        unit,
        params,
    };
    let bytes = serde_json::to_vec(&body).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl TokenizerSpec {
    /// Serialized spec file contents (pretty JSON with a trailing newline).
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let params = params_value(&self.strategy)?;
        let out = FileOut {
            version: FORMAT_VERSION,
            strategy: self.kind(),
            unit: self.unit,
            checksum: checksum(self.kind(), self.unit, &params)?,
            params: &params,
        };
        let mut text = serde_json::to_string_pretty(&out).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema = |msg: String| Error::Schema(msg);
        let root: serde_json::Value = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| schema("spec file must be a JSON object".into()))?;
        let version = obj
            .get("version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| schema("missing string field `version`".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version.to_string(),
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let field = |name: &str| obj.get(name).ok_or_else(|| schema(format!("missing field `{name}`")));
        let unit: TimeUnit =
            serde_json::from_value(field("unit")?.clone()).map_err(|e| schema(format!("unit: {e}")))?;
        let stored = field("checksum")?
            .as_str()
            .ok_or_else(|| schema("`checksum` must be a string".into()))?;
        let tagged = serde_json::json!({
            "strategy": field("strategy")?.clone(),
            "params": field("params")?.clone(),
        });
        let strategy: Strategy =
            serde_json::from_value(tagged).map_err(|e| schema(format!("strategy params: {e}")))?;
        let computed = checksum(strategy.kind(), unit, &params_value(&strategy)?)?;
        if computed != stored {
            return Err(Error::ChecksumMismatch {
                stored: stored.to_string(),
                computed,
            });
        }
        let spec = Self { strategy, unit };
        spec.validate().map_err(|e| schema(e.to_string()))?;
        Ok(spec)
    }
}

pub fn save_spec(spec: &TokenizerSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, spec.to_json()?)?;
    Ok(())
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<TokenizerSpec> {
    TokenizerSpec::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Event;

    fn seqs() -> Vec<EventSequence> {
        let mk = |ts: &[i64], iv: &[f64]| {
            EventSequence::new(
                ts.iter()
                    .zip(iv)
                    .map(|(&t, &i)| Event::new("x", t, i))
                    .collect(),
            )
            .unwrap()
        };
        vec![
            mk(&[1_642_042_328, 1_643_176_596], &[0.0, 0.4376036]),
            mk(&[1_600_000_000, 1_600_003_600, 1_600_010_800], &[0.0, 0.0013889, 0.0027778]),
        ]
    }

    #[test]
    fn token_counts() {
        let train = seqs();
        let count = |cfg: StrategyConfig| cfg.fit(&train, TimeUnit::Month).unwrap().tokens_per_value();
        assert_eq!(
            count(StrategyConfig::Numeric { precision: 6 }),
            TokenCount { count: 4, estimate: true }
        );
        assert_eq!(count(StrategyConfig::Byte).count, 4);
        assert_eq!(
            count(StrategyConfig::CalAbs { resolution: Resolution::Day, year_margin: 2 }).count,
            3
        );
        assert_eq!(count(StrategyConfig::CalRel { resolution: Resolution::Second }).count, 6);
        assert_eq!(count(StrategyConfig::ScaleBin { scale: Scale::Linear, bins: 8 }).count, 1);
        let rsq = |levels: Vec<usize>| StrategyConfig::Rsq {
            scale: Scale::log10(),
            levels,
            engine: KMeansEngine::Exact,
        };
        assert_eq!(count(rsq(vec![4])).count, 1);
        assert_eq!(count(rsq(vec![2, 2, 2, 2])).count, 4);
    }

    #[test]
    fn year_range_fit() {
        let spec = StrategyConfig::CalAbs {
            resolution: Resolution::Day,
            year_margin: 2,
        }
        .fit(&seqs(), TimeUnit::Month)
        .unwrap();
        match spec.strategy {
            Strategy::CalAbs { year_lo, year_hi, .. } => assert_eq!((year_lo, year_hi), (2018, 2024)),
            _ => unreachable!(),
        }
        assert!(spec.encode_value(0.0).is_err());
        assert!(spec.encode_value(1_642_042_328.0).is_ok());
    }

    #[test]
    fn value_round_trips() {
        let train = seqs();
        for cfg in StrategyConfig::presets() {
            let spec = cfg.fit(&train, TimeUnit::Month).unwrap();
            for seq in &train {
                for v in spec.inputs(seq) {
                    let toks = spec.encode_value(v).unwrap();
                    assert_eq!(toks.len(), spec.payload_len(), "{}", spec.label());
                    let back = spec.decode_value(&toks).unwrap();
                    assert!(back >= 0.0);
                }
            }
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let spec = StrategyConfig::Rsq {
            scale: Scale::log10(),
            levels: vec![2, 2],
            engine: KMeansEngine::Exact,
        }
        .fit(&seqs(), TimeUnit::Month)
        .unwrap();
        let text = spec.to_json().unwrap();
        assert_eq!(TokenizerSpec::from_json(&text).unwrap(), spec);
        assert_eq!(TokenizerSpec::from_json(&text).unwrap().to_json().unwrap(), text);

        let truncated = &text[..text.len() / 2];
        assert!(matches!(TokenizerSpec::from_json(truncated), Err(Error::Schema(_))));

        let future = text.replacen("\"version\": \"1\"", "\"version\": \"99\"", 1);
        match TokenizerSpec::from_json(&future) {
            Err(Error::VersionMismatch { found, expected }) => {
                assert_eq!(found, "99");
                assert_eq!(expected, FORMAT_VERSION);
            }
            other => panic!("{other:?}"),
        }

        let tampered = text.replacen("\"month\"", "\"hour\"", 1);
        assert!(matches!(TokenizerSpec::from_json(&tampered), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn file_keys() {
        let spec = TokenizerSpec::new(Strategy::Byte {}, TimeUnit::Hour).unwrap();
        let v: serde_json::Value = serde_json::from_str(&spec.to_json().unwrap()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["checksum", "params", "strategy", "unit", "version"]);
        assert_eq!(v["strategy"], "byte");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(TokenizerSpec::new(Strategy::Numeric { precision: 30 }, TimeUnit::Hour).is_err());
        assert!(TokenizerSpec::new(
            Strategy::CalAbs { resolution: Resolution::Day, year_lo: 2030, year_hi: 2020 },
            TimeUnit::Hour
        )
        .is_err());
    }
}
