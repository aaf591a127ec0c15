use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MAX_CODEBOOK;
use crate::codec::{parse_special, special};
use crate::error::{Error, Result};
use crate::transforms::{fit_minmax, inverse_transform, transform, Restored, Scale};

#[derive(Serialize, Deserialize)]
struct BinParams {
    scale: Scale,
    k: usize,
    lo: f64,
    hi: f64,
}

/// `k` uniform bins over `[lo, hi]` in transformed space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BinParams", into = "BinParams")]
pub struct BinSpec {
    scale: Scale,
    k: usize,
    lo: f64,
    hi: f64,
    centers: Arc<[f64]>,
}

impl TryFrom<BinParams> for BinSpec {
    type Error = Error;

    fn try_from(p: BinParams) -> Result<Self> {
        BinSpec::new(p.scale, p.k, p.lo, p.hi)
    }
}

impl From<BinSpec> for BinParams {
    fn from(b: BinSpec) -> Self {
        BinParams {
            scale: b.scale,
            k: b.k,
            lo: b.lo,
            hi: b.hi,
        }
    }
}

fn covers(c: f64, x: f64, h: f64) -> bool {
    (x - c).abs() <= h
}

/// Maps floats to integers with the same order, so ulp-level searches can
/// bisect instead of stepping one float at a time.
fn ord(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        i64::MIN - b
    } else {
        b
    }
}

fn unord(i: i64) -> f64 {
    if i < 0 {
        f64::from_bits((i64::MIN - i) as u64)
    } else {
        f64::from_bits(i as u64)
    }
}

/// Last float in `[a, b]` satisfying `pred`, given `pred(a)` and a
/// true-then-false predicate.
fn last_true(a: f64, b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (ord(a) as i128, ord(b) as i128);
    if pred(b) {
        return b;
    }
    while hi - lo > 1 {
        let mid = (lo + (hi - lo) / 2) as i64;
        if pred(unord(mid)) {
            lo = mid as i128;
        } else {
            hi = mid as i128;
        }
    }
    unord(lo as i64)
}

/// First float in `[a, b]` satisfying `pred`, given `pred(b)` and a
/// false-then-true predicate.
fn first_true(a: f64, b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (ord(a) as i128, ord(b) as i128);
    if pred(a) {
        return a;
    }
    while hi - lo > 1 {
        let mid = (lo + (hi - lo) / 2) as i64;
        if pred(unord(mid)) {
            hi = mid as i128;
        } else {
            lo = mid as i128;
        }
    }
    unord(hi as i64)
}

/// Centers `lo + (j + 0.5) * width`, each moved by a few ulps where that
/// helps floating-point coverage.
///
/// Rounding the formula can leave a one-ulp hole between neighbouring bins:
/// a float whose computed distance to both centers exceeds half a width.
/// `lo` and `hi` are always covered. Each interior hole is closed by moving
/// one neighbour if that opens no new hole. A hole with no slack on either
/// side is left alone, since not every range can be tiled exactly once
/// distances are rounded.
fn center_table(k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let w = (hi - lo) / k as f64;
    let h = w / 2.0;
    let mut c: Vec<f64> = (0..k).map(|j| (j as f64 + 0.5).mul_add(w, lo)).collect();
    if !covers(c[0], lo, h) {
        c[0] = last_true(lo, c[0], |x| covers(x, lo, h));
    }
    if !covers(c[k - 1], hi, h) {
        c[k - 1] = first_true(c[k - 1], hi, |x| covers(x, hi, h));
    }
    // last float covered above / first float covered below a center
    let up = |c: f64| last_true(c, c + w, |x| covers(c, x, h));
    let down = |c: f64| first_true(c - w, c, |x| covers(c, x, h));
    let meets = |left: f64, right: f64| down(right) <= up(left).next_up();
    for j in 0..k.saturating_sub(1) {
        if meets(c[j], c[j + 1]) {
            continue;
        }
        let need = up(c[j]).next_up();
        let lower = last_true(need, c[j + 1], |x| covers(x, need, h));
        let right_ok = if j + 2 == k {
            covers(lower, hi, h)
        } else {
            meets(lower, c[j + 2])
        };
        if right_ok {
            c[j + 1] = lower;
            continue;
        }
        let need = down(c[j + 1]).next_down();
        let raised = first_true(c[j], need, |x| covers(x, need, h));
        let left_ok = if j == 0 {
            covers(raised, lo, h)
        } else {
            meets(c[j - 1], raised)
        };
        if left_ok {
            c[j] = raised;
        }
    }
    c
}

impl BinSpec {
    pub fn new(scale: Scale, k: usize, lo: f64, hi: f64) -> Result<Self> {
        scale.validate()?;
        check_k(k)?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "bin range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        let h = (hi - lo) / k as f64 / 2.0;
        if !(lo + h > lo && hi - h < hi) {
            return Err(Error::InvalidParameter(format!(
                "[{lo}, {hi}] is too narrow for {k} bins at double precision"
            )));
        }
        Ok(Self {
            scale,
            k,
            lo,
            hi,
            centers: center_table(k, lo, hi).into(),
        })
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.k as f64
    }

    /// Center of bin `j` in transformed space, `lo + (j + 0.5) * width` up to
    /// a few ulps (see the half-width guarantee on [`BinSpec::index`]).
    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    pub fn validate(&self) -> Result<()> {
        // construction already checked everything
        Ok(())
    }

    /// Bin of `v`: `floor((f(v) - lo) / width)` clamped to `[0, k)`, then
    /// moved to a neighbour if that one's center is strictly closer. For
    /// `f(v)` in `[lo, hi]` the chosen center is within `width / 2` of `f(v)`.
    pub fn index(&self, v: f64) -> Result<usize> {
        let x = transform(v, self.scale)?;
        let j = ((x - self.lo) / self.width()).floor();
        // NaN cannot occur: x and the range are finite
        let mut j = j.clamp(0.0, (self.k - 1) as f64) as usize;
        // floor() can land one bin off for x within an ulp of an edge
        let dist = |i: usize| (x - self.center(i)).abs();
        while j > 0 && dist(j - 1) < dist(j) {
            j -= 1;
        }
        while j + 1 < self.k && dist(j + 1) < dist(j) {
            j += 1;
        }
        Ok(j)
    }

    /// Transformed-space value a token decodes to, before the inverse transform.
    pub fn transformed_center(&self, v: f64) -> Result<f64> {
        Ok(self.center(self.index(v)?))
    }

    pub fn restore(&self, j: usize) -> Result<Restored> {
        if j >= self.k {
            return Err(Error::IndexOutOfRange {
                what: "bin set".into(),
                index: j,
                size: self.k,
            });
        }
        Ok(inverse_transform(self.center(j), self.scale))
    }

    pub fn literals(&self) -> Vec<String> {
        (0..self.k).map(bin_literal).collect()
    }
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_CODEBOOK {
        return Err(Error::InvalidParameter(format!(
            "codebook size must be in 1..={MAX_CODEBOOK}, got {k}"
        )));
    }
    Ok(())
}

pub fn bin_literal(j: usize) -> String {
    special("bin", j as u64, 3)
}

pub fn bin_fit(values: &[f64], scale: Scale, k: usize) -> Result<BinSpec> {
    scale.validate()?;
    check_k(k)?;
    let xs = values
        .iter()
        .map(|&v| transform(v, scale))
        .collect::<Result<Vec<_>>>()?;
    let mm = fit_minmax(&xs)?;
    if mm.is_degenerate() {
        log::warn!("all training values map to {}; widening bin range by 0.5", mm.min);
    }
    let (lo, hi) = mm.widened();
    BinSpec::new(scale, k, lo, hi)
}

pub fn bin_encode(v: f64, spec: &BinSpec) -> Result<String> {
    Ok(bin_literal(spec.index(v)?))
}

pub fn bin_decode(token: &str, spec: &BinSpec) -> Result<f64> {
    let j = parse_special(token, "bin", 3).ok_or_else(|| Error::MalformedToken(token.to_string()))?;
    Ok(spec.restore(j as usize)?.value)
}
