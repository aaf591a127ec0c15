//! Residual scalar quantization.
//!
//! Level 0 quantizes the transformed value to its nearest centroid; every
//! following level quantizes what is left over. A value becomes one token
//! per level, `<|L{level}_{index}|>`, and decodes to the sum of the chosen
//! centroids mapped back through the inverse transform.

use serde::{Deserialize, Serialize};

use super::bins::check_k;
use super::kmeans::{kmeans1d_fit_with, nearest, KMeansEngine};
use crate::codec::special;
use crate::error::{Error, Result};
use crate::transforms::{inverse_transform, transform, Restored, Scale};

/// Standard level budgets.
pub const PRESET_L1: &[usize] = &[256];
pub const PRESET_L2: &[usize] = &[128, 128];
pub const PRESET_L3: &[usize] = &[85, 85, 86];
pub const PRESET_L4: &[usize] = &[64, 64, 64, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub level: usize,
    pub centroids: Vec<f64>,
}

impl Codebook {
    pub fn nearest(&self, x: f64) -> usize {
        nearest(&self.centroids, x)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn literal(&self, index: usize) -> String {
        rsq_literal(self.level, index)
    }

    fn validate(&self, level: usize) -> Result<()> {
        if self.level != level {
            return Err(Error::InvalidParameter(format!(
                "codebook at position {level} is labelled level {}",
                self.level
            )));
        }
        check_k(self.centroids.len())?;
        if self.centroids.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("level {level} has a non-finite centroid")));
        }
        if !self.centroids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(format!(
                "level {level} centroids are not strictly ascending"
            )));
        }
        Ok(())
    }
}

pub fn rsq_literal(level: usize, index: usize) -> String {
    special(&format!("L{level}"), index as u64, 3)
}

fn parse_literal(token: &str) -> Option<(usize, usize)> {
    let body = token.strip_prefix("<|L")?.strip_suffix("|>")?;
    let (level, index) = body.split_once('_')?;
    if level.is_empty()
        || index.len() != 3
        || !level.bytes().all(|b| b.is_ascii_digit())
        || !index.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    Some((level.parse().ok()?, index.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsqSpec {
    pub scale: Scale,
    pub levels: Vec<Codebook>,
}

impl RsqSpec {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Codebook::len).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("RSQ spec has no levels".into()));
        }
        self.levels
            .iter()
            .enumerate()
            .try_for_each(|(i, cb)| cb.validate(i))
    }

    /// Level indices for an already transformed value.
    pub fn quantize(&self, x: f64) -> Vec<usize> {
        let mut residual = x;
        self.levels
            .iter()
            .map(|cb| {
                let q = cb.nearest(residual);
                residual -= cb.centroids[q];
                q
            })
            .collect()
    }

    pub fn indices(&self, v: f64) -> Result<Vec<usize>> {
        Ok(self.quantize(transform(v, self.scale)?))
    }

    /// Sum of the selected centroids in transformed space.
    pub fn reconstruct(&self, indices: &[usize]) -> Result<f64> {
        if indices.len() != self.levels.len() {
            return Err(Error::Arity {
                expected: self.levels.len(),
                got: indices.len(),
            });
        }
        let mut sum = 0.0;
        for (cb, &q) in self.levels.iter().zip(indices) {
            let c = cb.centroids.get(q).ok_or_else(|| Error::IndexOutOfRange {
                what: format!("level {} codebook", cb.level),
                index: q,
                size: cb.len(),
            })?;
            sum += c;
        }
        Ok(sum)
    }

    pub fn restore(&self, indices: &[usize]) -> Result<Restored> {
        Ok(inverse_transform(self.reconstruct(indices)?, self.scale))
    }

    pub fn parse_tokens(&self, tokens: &[String]) -> Result<Vec<usize>> {
        if tokens.len() != self.levels.len() {
            return Err(Error::Arity {
                expected: self.levels.len(),
                got: tokens.len(),
            });
        }
        tokens
            .iter()
            .enumerate()
            .map(|(expected, tok)| {
                let (level, index) =
                    parse_literal(tok).ok_or_else(|| Error::MalformedToken(tok.clone()))?;
                if level != expected {
                    return Err(Error::LevelOrder {
                        expected,
                        token: tok.clone(),
                    });
                }
                Ok(index)
            })
            .collect()
    }
}

/// A fitted spec plus the training diagnostics of the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RsqFit {
    pub spec: RsqSpec,
    /// Mean squared transformed-space residual after each level.
    pub level_mse: Vec<f64>,
}

pub fn rsq_fit(values: &[f64], scale: Scale, ks: &[usize]) -> Result<RsqFit> {
    rsq_fit_with(values, scale, ks, KMeansEngine::Exact)
}

pub fn rsq_fit_with(values: &[f64], scale: Scale, ks: &[usize], engine: KMeansEngine) -> Result<RsqFit> {
    scale.validate()?;
    if values.is_empty() {
        return Err(Error::EmptyInput("RSQ fit"));
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("RSQ needs at least one level".into()));
    }
    for &k in ks {
        check_k(k)?;
    }
    let mut residuals = values
        .iter()
        .map(|&v| transform(v, scale))
        .collect::<Result<Vec<_>>>()?;
    let n = residuals.len() as f64;
    let mut prev_mse = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let mut levels = Vec::with_capacity(ks.len());
    let mut level_mse = Vec::with_capacity(ks.len());
    for (level, &k) in ks.iter().enumerate() {
        let centroids = kmeans1d_fit_with(&residuals, k, engine)?.centroids;
        let cb = Codebook { level, centroids };
        for r in residuals.iter_mut() {
            *r -= cb.centroids[cb.nearest(*r)];
        }
        let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n;
        // each level's codebook does at least as well as the single point 0
        if mse > prev_mse * (1.0 + 1e-12) {
            return Err(Error::Internal(format!(
                "RSQ level {level} increased training MSE from {prev_mse} to {mse}"
            )));
        }
        prev_mse = mse;
        level_mse.push(mse);
        levels.push(cb);
    }
    Ok(RsqFit {
        spec: RsqSpec { scale, levels },
        level_mse,
    })
}

pub fn rsq_encode(v: f64, spec: &RsqSpec) -> Result<Vec<String>> {
    Ok(spec
        .indices(v)?
        .into_iter()
        .enumerate()
        .map(|(level, q)| rsq_literal(level, q))
        .collect())
}

pub fn rsq_decode(tokens: &[String], spec: &RsqSpec) -> Result<f64> {
    let indices = spec.parse_tokens(tokens)?;
    Ok(spec.restore(&indices)?.value)
}
