//! Codec benchmarks: reconstruction error ("codec floor"), token accounting
//! and interval-distribution analysis.
//!
//! Reconstruction RMSE measures `decode(encode(v))` against `v` in dataset
//! units. It is the error floor a tokenizer imposes, not a model's
//! prediction error.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::dataset::{Dataset, EventSequence, Split};
use crate::error::{Error, Result};
use crate::manifest::build_manifest;
use crate::tokenizer::{Strategy, TimeInput, TokenCount, TokenizerSpec};
use crate::transforms::{histogram, Histogram, Scale};

/// Tokens per value for a fitted spec.
pub fn tokens_per_value(spec: &TokenizerSpec) -> TokenCount {
    spec.tokens_per_value()
}

fn rmse(sq_sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (sq_sum / n as f64).sqrt()
    }
}

/// RMSE of `decode(encode(v))` over interval values given in dataset units.
/// Absolute-calendar specs need timestamps; use [`sequence_rmse`] for those.
pub fn reconstruction_rmse(spec: &TokenizerSpec, values: &[f64]) -> Result<f64> {
    let spu = spec.unit.seconds_per_unit();
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let back = match spec.input() {
            TimeInput::Interval => spec.decode_value(&spec.encode_value(v)?)?,
            TimeInput::DeltaSeconds => spec.decode_value(&spec.encode_value(v * spu)?)? / spu,
            TimeInput::Timestamp => {
                return Err(Error::InvalidParameter(format!(
                    "{} encodes absolute timestamps; evaluate it on sequences",
                    spec.label()
                )))
            }
        }
        .max(0.0);
        let d = back - v;
        if !d.is_finite() {
            return Err(Error::DecodeRange(format!("value {i} reconstructs to {back}")));
        }
        sum += d * d;
    }
    Ok(rmse(sum, values.len()))
}

/// Interval reconstruction RMSE, in dataset units, over every event of
/// `seqs`. Calendar strategies are scored against the timestamp gaps they
/// actually encode.
pub fn sequence_rmse(spec: &TokenizerSpec, seqs: &[EventSequence]) -> Result<f64> {
    let spu = spec.unit.seconds_per_unit();
    let mut sum = 0.0;
    let mut n = 0;
    for seq in seqs {
        let inputs = spec.inputs(seq);
        let decoded = inputs
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                spec.encode_value(v)
                    .and_then(|t| spec.decode_value(&t))
                    .map_err(|e| e.at_event(i))
            })
            .collect::<Result<Vec<f64>>>()?;
        match spec.input() {
            TimeInput::Interval => {
                for (v, back) in inputs.iter().zip(&decoded) {
                    sum += (back - v).powi(2);
                }
            }
            TimeInput::DeltaSeconds => {
                for (v, back) in inputs.iter().zip(&decoded) {
                    sum += ((back - v) / spu).powi(2);
                }
            }
            TimeInput::Timestamp => {
                // first event's gap is structurally zero on both sides
                for i in 1..inputs.len() {
                    let truth = inputs[i] - inputs[i - 1];
                    let back = decoded[i] - decoded[i - 1];
                    sum += ((back - truth) / spu).powi(2);
                }
            }
        }
        n += inputs.len();
    }
    Ok(rmse(sum, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub strategy: String,
    pub scale: String,
    pub levels_or_bins: String,
    pub tokens_per_value: TokenCount,
    pub vocab_added: usize,
    pub reconstruction_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub dataset: String,
    pub split: Split,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str =
        "strategy,scale,levels_or_bins,tokens_per_value,vocab_added,reconstruction_rmse";

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.strategy,
                r.scale,
                r.levels_or_bins,
                r.tokens_per_value.count,
                r.vocab_added,
                r.reconstruction_rmse
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "dataset {} ({} split); rmse is the codec floor in dataset units, not a prediction error",
            self.dataset,
            self.split.as_str()
        )?;
        writeln!(f, "{:<26} {:>7} {:>7} {:>14}", "strategy", "tokens", "vocab+", "rmse")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<26} {:>7} {:>7} {:>14.6e}",
                r.label,
                r.tokens_per_value.to_string(),
                r.vocab_added,
                r.reconstruction_rmse
            )?;
        }
        Ok(())
    }
}

fn describe(spec: &TokenizerSpec) -> (String, String) {
    match &spec.strategy {
        Strategy::Numeric { precision } => ("-".into(), format!("p{precision}")),
        Strategy::Byte {} => ("-".into(), "-".into()),
        Strategy::CalAbs { resolution, .. } | Strategy::CalRel { resolution } => {
            ("-".into(), resolution.to_string())
        }
        Strategy::ScaleBin(b) => (b.scale().to_string(), b.k().to_string()),
        Strategy::Rsq(r) => (
            r.scale.to_string(),
            r.level_sizes().iter().map(usize::to_string).collect::<Vec<_>>().join("-"),
        ),
    }
}

pub fn bench_row(spec: &TokenizerSpec, seqs: &[EventSequence]) -> Result<BenchRow> {
    let (scale, levels_or_bins) = describe(spec);
    Ok(BenchRow {
        label: spec.label(),
        strategy: spec.kind().to_string(),
        scale,
        levels_or_bins,
        tokens_per_value: spec.tokens_per_value(),
        vocab_added: build_manifest(spec)?.strategy_tokens().len(),
        reconstruction_rmse: sequence_rmse(spec, seqs)?,
    })
}

/// One row per spec, evaluated on the test split. Specs are scored in
/// parallel; row order follows `specs`.
pub fn compare(specs: &[TokenizerSpec], d: &Dataset) -> Result<BenchReport> {
    compare_on(specs, d, Split::Test)
}

pub fn compare_on(specs: &[TokenizerSpec], d: &Dataset, split: Split) -> Result<BenchReport> {
    for spec in specs {
        if spec.unit != d.unit {
            return Err(Error::UnitMismatch {
                spec: spec.unit.to_string(),
                dataset: d.unit.to_string(),
            });
        }
    }
    let seqs = d.split(split);
    let rows = specs
        .par_iter()
        .map(|s| bench_row(s, seqs))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        dataset: d.name.clone(),
        split,
        rows,
    })
}

/// Gaps between consecutive events across all splits (first events excluded).
pub fn inter_event_intervals(d: &Dataset) -> Vec<f64> {
    d.sequences().flat_map(|(_, s)| s.intervals().skip(1)).collect()
}

/// Linear- and log-scale histograms of all inter-event intervals.
pub fn analyze(d: &Dataset, bins: usize) -> Result<(Histogram, Histogram)> {
    let values = inter_event_intervals(d);
    if values.is_empty() {
        return Err(Error::EmptyInput("no inter-event intervals (all sequences have one event)"));
    }
    Ok((
        histogram(&values, bins, Scale::Linear)?,
        histogram(&values, bins, Scale::log10())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::quant::BinSpec;
    use crate::dataset::{Event, TimeUnit};
    use crate::synthetic::{gen_synthetic, Shape, SyntheticConfig};
    use crate::tokenizer::StrategyConfig;

    #[test]
    fn byte_is_lossless_on_f32_values() {
        let spec = TokenizerSpec::new(Strategy::Byte {}, TimeUnit::Hour).unwrap();
        let values = [0.0, 0.5, 1.25, 1024.0, f32::from_bits(0x3EE0_0D93) as f64];
        assert_eq!(reconstruction_rmse(&spec, &values).unwrap(), 0.0);
    }

    #[test]
    fn single_bin_decodes_to_center() {
        let spec = TokenizerSpec::new(
            Strategy::ScaleBin(BinSpec::new(Scale::Linear, 1, 0.0, 1.0).unwrap()),
            TimeUnit::Hour,
        )
        .unwrap();
        assert_eq!(reconstruction_rmse(&spec, &[0.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn abs_calendar_needs_sequences() {
        let seq = EventSequence::new(vec![
            Event::new("a", 1_642_042_328, 0.0),
            Event::new("b", 1_643_176_596, 0.438),
        ])
        .unwrap();
        let spec = StrategyConfig::CalAbs {
            resolution: crate::codec::calendar::Resolution::Second,
            year_margin: 2,
        }
        .fit(std::slice::from_ref(&seq), TimeUnit::Month)
        .unwrap();
        assert!(reconstruction_rmse(&spec, &[1.0]).is_err());
        assert_eq!(sequence_rmse(&spec, &[seq]).unwrap(), 0.0);
    }

    #[test]
    fn report_rows_and_csv() {
        let d = gen_synthetic(&SyntheticConfig::new(Shape::lognormal(), 10, 8, 5)).unwrap();
        let specs: Vec<_> = [StrategyConfig::Byte, StrategyConfig::Numeric { precision: 6 }]
            .iter()
            .map(|c| c.fit(&d.train, d.unit).unwrap())
            .collect();
        let report = compare(&specs, &d).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].vocab_added, 256);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(BenchReport::CSV_HEADER));
        assert_eq!(text.lines().count(), 3);
        assert!(report.to_string().contains("codec floor"));

        let single = compare(&specs[..1], &d).unwrap();
        assert_eq!(single.rows.len(), 1);
    }

    #[test]
    fn unit_mismatch() {
        let d = gen_synthetic(&SyntheticConfig::new(Shape::lognormal(), 5, 4, 5)).unwrap();
        let spec = TokenizerSpec::new(Strategy::Byte {}, TimeUnit::Month).unwrap();
        assert!(matches!(compare(&[spec], &d), Err(Error::UnitMismatch { .. })));
    }

    #[test]
    fn constant_intervals_fill_one_bin() {
        let cfg = SyntheticConfig::new(
            Shape::Spiky {
                atoms: vec![3.0],
                weights: vec![1.0],
                jitter: 0.0,
            },
            5,
            6,
            1,
        );
        let d = gen_synthetic(&cfg).unwrap();
        let (lin, log) = analyze(&d, 10).unwrap();
        for h in [&lin, &log] {
            assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
            assert_eq!(h.total(), 25);
        }
    }
}
