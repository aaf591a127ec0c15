//! Scale transforms shared by the binning codecs and the distribution analysis.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset added before taking the logarithm so that zero intervals stay finite.
pub const DEFAULT_LOG_EPSILON: f64 = 1e-6;

/// The space in which quantization happens.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    /// `log10(v + epsilon)`.
    Log10 { epsilon: f64 },
}

impl Scale {
    pub fn log10() -> Self {
        Scale::Log10 {
            epsilon: DEFAULT_LOG_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scale::Linear => Ok(()),
            Scale::Log10 { epsilon } if epsilon > 0.0 && epsilon.is_finite() => Ok(()),
            Scale::Log10 { epsilon } => Err(Error::InvalidParameter(format!(
                "log epsilon must be positive and finite, got {epsilon}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log10 { .. } => "log",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" | "log10" => Ok(Scale::log10()),
            other => Err(Error::InvalidParameter(format!("unknown scale `{other}`"))),
        }
    }
}

pub fn transform(v: f64, scale: Scale) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Domain(format!(
            "time value must be finite and non-negative, got {v}"
        )));
    }
    Ok(match scale {
        Scale::Linear => v,
        Scale::Log10 { epsilon } => (v + epsilon).log10(),
    })
}

/// Result of mapping back to time, with a flag set when a negative value was
/// clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restored {
    pub value: f64,
    pub clamped: bool,
}

pub fn inverse_transform(u: f64, scale: Scale) -> Restored {
    let raw = match scale {
        Scale::Linear => u,
        Scale::Log10 { epsilon } => 10f64.powf(u) - epsilon,
    };
    if raw < 0.0 {
        Restored {
            value: 0.0,
            clamped: true,
        }
    } else {
        Restored {
            value: raw,
            clamped: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }

    /// The range to bin over: a degenerate range is widened by 0.5 each side.
    pub fn widened(&self) -> (f64, f64) {
        if self.is_degenerate() {
            (self.min - 0.5, self.max + 0.5)
        } else {
            (self.min, self.max)
        }
    }
}

pub fn fit_minmax(values: &[f64]) -> Result<MinMax> {
    let (&first, rest) = values.split_first().ok_or(Error::EmptyInput("min/max fit"))?;
    let mut mm = MinMax {
        min: first,
        max: first,
    };
    for &v in std::iter::once(&first).chain(rest) {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v}")));
        }
        mm.min = mm.min.min(v);
        mm.max = mm.max.max(v);
    }
    Ok(mm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Bin edges in transformed space, `counts.len() + 1` entries.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub scale: Scale,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the fullest bin (first one on ties).
    pub fn modal_bin(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c)?;
        }
        Ok(())
    }
}

/// Uniform-width histogram over `[min, max]` of the transformed values; the
/// last bin includes its right edge.
pub fn histogram(values: &[f64], bins: usize, scale: Scale) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    scale.validate()?;
    let xs = values
        .iter()
        .map(|&v| transform(v, scale))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = fit_minmax(&xs)?.widened();
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0u64; bins];
    for x in xs {
        let j = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[j] += 1;
    }
    Ok(Histogram {
        edges,
        counts,
        scale,
    })
}
