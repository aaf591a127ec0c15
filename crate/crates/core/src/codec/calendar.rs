//! Gregorian calendar tokens for absolute instants and relative spans.
//!
//! Absolute instants decompose into proleptic Gregorian UTC fields
//! (`<|year_2022|>`, `<|month_01|>`, ...). Relative spans use a greedy
//! mixed-radix split with fixed units: a year is 365 days and a month 30
//! days, so the decomposition always has an exact additive inverse.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{parse_special, special};
use crate::error::{Error, Result};

/// 1900-01-01T00:00:00Z
pub const MIN_EPOCH: i64 = -2_208_988_800;
/// 2200-01-01T00:00:00Z, exclusive.
pub const MAX_EPOCH: i64 = 7_258_118_400;

const MINUTE: u64 = 60;
const HOUR: u64 = 3_600;
const DAY: u64 = 86_400;
const REL_MONTH: u64 = 30 * DAY;
const REL_YEAR: u64 = 365 * DAY;
/// Relative year tokens are two digits wide.
pub const MAX_REL_YEARS: u64 = 99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Day,
    Hour,
    Minute,
    Second,
}

impl Resolution {
    /// Number of calendar fields (and therefore tokens) per value.
    pub fn n_fields(self) -> usize {
        match self {
            Resolution::Day => 3,
            Resolution::Hour => 4,
            Resolution::Minute => 5,
            Resolution::Second => 6,
        }
    }

    /// Length of the smallest emitted field, in seconds.
    pub fn granularity_s(self) -> u64 {
        match self {
            Resolution::Day => DAY,
            Resolution::Hour => HOUR,
            Resolution::Minute => MINUTE,
            Resolution::Second => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::Day => "day",
            Resolution::Hour => "hour",
            Resolution::Minute => "minute",
            Resolution::Second => "second",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Resolution::Day),
            "hour" => Ok(Resolution::Hour),
            "minute" | "min" => Ok(Resolution::Minute),
            "second" | "sec" => Ok(Resolution::Second),
            other => Err(Error::InvalidParameter(format!("unknown resolution `{other}`"))),
        }
    }
}

/// Token field names in emission order.
const FIELDS: [&str; 6] = ["year", "month", "day", "hour", "min", "sec"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CivilTime {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub second: u32,
}

impl CivilTime {
    pub fn date(year: i32, month: u32, day: u32) -> Self {
        Self {
            year,
            month,
            day,
            hour: 0,
            minute: 0,
            second: 0,
        }
    }

    pub fn with_time(mut self, hour: u32, minute: u32, second: u32) -> Self {
        self.hour = hour;
        self.minute = minute;
        self.second = second;
        self
    }

    fn fields(&self) -> [u64; 6] {
        [
            self.year as u64,
            self.month as u64,
            self.day as u64,
            self.hour as u64,
            self.minute as u64,
            self.second as u64,
        ]
    }
}

impl fmt::Display for CivilTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
            self.year, self.month, self.day, self.hour, self.minute, self.second
        )
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

// Days since 1970-01-01 for a proleptic Gregorian date (era-based, 400-year cycles).
fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year as i64 - 1 } else { year as i64 };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (month as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(days: i64) -> (i32, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = (yoe + era * 400 + i64::from(month <= 2)) as i32;
    (year, month, day)
}

fn check_range(t: i64) -> Result<()> {
    if (MIN_EPOCH..MAX_EPOCH).contains(&t) {
        Ok(())
    } else {
        Err(Error::Range(format!(
            "epoch {t} outside the supported window [1900-01-01, 2200-01-01)"
        )))
    }
}

pub fn civil_from_epoch(t: i64) -> Result<CivilTime> {
    check_range(t)?;
    let days = t.div_euclid(DAY as i64);
    let secs = t.rem_euclid(DAY as i64) as u32;
    let (year, month, day) = civil_from_days(days);
    Ok(CivilTime::date(year, month, day).with_time(secs / 3600, secs / 60 % 60, secs % 60))
}

pub fn epoch_from_civil(c: &CivilTime) -> Result<i64> {
    if !(1..=12).contains(&c.month) || c.day == 0 || c.day > days_in_month(c.year, c.month) {
        return Err(Error::InvalidDate(format!(
            "{:04}-{:02}-{:02}",
            c.year, c.month, c.day
        )));
    }
    if c.hour > 23 || c.minute > 59 || c.second > 59 {
        return Err(Error::InvalidDate(format!(
            "time of day {:02}:{:02}:{:02}",
            c.hour, c.minute, c.second
        )));
    }
    let t = days_from_civil(c.year, c.month, c.day) * DAY as i64
        + (c.hour * 3600 + c.minute * 60 + c.second) as i64;
    check_range(t)?;
    Ok(t)
}

fn width(field: usize, absolute: bool) -> usize {
    if field == 0 && absolute {
        4
    } else {
        2
    }
}

pub fn encode_abs(t: i64, r: Resolution) -> Result<Vec<String>> {
    let fields = civil_from_epoch(t)?.fields();
    Ok((0..r.n_fields())
        .map(|i| special(FIELDS[i], fields[i], width(i, true)))
        .collect())
}

fn parse_fields(tokens: &[String], r: Resolution, absolute: bool) -> Result<[u64; 6]> {
    if tokens.len() != r.n_fields() {
        return Err(Error::Arity {
            expected: r.n_fields(),
            got: tokens.len(),
        });
    }
    let mut out = [0u64; 6];
    for (i, tok) in tokens.iter().enumerate() {
        out[i] = parse_special(tok, FIELDS[i], width(i, absolute))
            .ok_or_else(|| Error::MalformedToken(tok.clone()))?;
    }
    Ok(out)
}

/// Inverse of [`encode_abs`]; fields below the resolution take their minimum
/// (day 1, midnight).
pub fn decode_abs(tokens: &[String], r: Resolution) -> Result<i64> {
    let f = parse_fields(tokens, r, true)?;
    let civil = CivilTime {
        year: f[0] as i32,
        month: f[1] as u32,
        day: f[2] as u32,
        hour: f[3] as u32,
        minute: f[4] as u32,
        second: f[5] as u32,
    };
    epoch_from_civil(&civil)
}

/// Fixed-unit decomposition of a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelSpan {
    pub years: u64,
    pub months: u64,
    pub days: u64,
    pub hours: u64,
    pub minutes: u64,
    pub seconds: u64,
}

impl RelSpan {
    /// Greedy largest-unit-first split of whole seconds.
    pub fn from_seconds(total: u64) -> Self {
        let mut rest = total;
        let mut take = |unit: u64| {
            let n = rest / unit;
            rest %= unit;
            n
        };
        Self {
            years: take(REL_YEAR),
            months: take(REL_MONTH),
            days: take(DAY),
            hours: take(HOUR),
            minutes: take(MINUTE),
            seconds: take(1),
        }
    }

    pub fn total_seconds(&self) -> u64 {
        self.years * REL_YEAR
            + self.months * REL_MONTH
            + self.days * DAY
            + self.hours * HOUR
            + self.minutes * MINUTE
            + self.seconds
    }

    fn fields(&self) -> [u64; 6] {
        [
            self.years,
            self.months,
            self.days,
            self.hours,
            self.minutes,
            self.seconds,
        ]
    }
}

/// Largest value each relative field may take: 99 years, 12 months, 30 days.
const REL_MAX: [u64; 6] = [MAX_REL_YEARS, 12, 30, 23, 59, 59];

pub fn encode_rel(delta_s: f64, r: Resolution) -> Result<Vec<String>> {
    if !delta_s.is_finite() || delta_s < 0.0 {
        return Err(Error::Domain(format!(
            "relative span must be finite and non-negative, got {delta_s}"
        )));
    }
    let whole = delta_s.floor();
    if whole >= ((MAX_REL_YEARS + 1) * REL_YEAR) as f64 {
        return Err(Error::Range(format!(
            "span of {delta_s} s reaches the {}-year ceiling",
            MAX_REL_YEARS + 1
        )));
    }
    let fields = RelSpan::from_seconds(whole as u64).fields();
    Ok((0..r.n_fields())
        .map(|i| special(FIELDS[i], fields[i], 2))
        .collect())
}

pub fn decode_rel(tokens: &[String], r: Resolution) -> Result<u64> {
    let f = parse_fields(tokens, r, false)?;
    for (i, (&v, &max)) in f.iter().zip(REL_MAX.iter()).enumerate() {
        if v > max {
            return Err(Error::Range(format!(
                "relative {} field {v} exceeds {max} in `{}`",
                FIELDS[i], tokens[i]
            )));
        }
    }
    let span = RelSpan {
        years: f[0],
        months: f[1],
        days: f[2],
        hours: f[3],
        minutes: f[4],
        seconds: f[5],
    };
    Ok(span.total_seconds())
}

fn field_tokens(field: usize, lo: u64, hi: u64, absolute: bool) -> impl Iterator<Item = String> {
    (lo..=hi).map(move |v| special(FIELDS[field], v, width(field, absolute)))
}

/// Every absolute-calendar literal for years in `year_lo..=year_hi`, grouped by field.
pub fn abs_vocab(r: Resolution, year_lo: i32, year_hi: i32) -> Vec<(&'static str, Vec<String>)> {
    const ABS_RANGE: [(u64, u64); 6] = [(0, 0), (1, 12), (1, 31), (0, 23), (0, 59), (0, 59)];
    (0..r.n_fields())
        .map(|i| {
            let (lo, hi) = if i == 0 {
                (year_lo as u64, year_hi as u64)
            } else {
                ABS_RANGE[i]
            };
            (FIELDS[i], field_tokens(i, lo, hi, true).collect())
        })
        .collect()
}

/// Every relative-calendar literal, grouped by field.
pub fn rel_vocab(r: Resolution) -> Vec<(&'static str, Vec<String>)> {
    (0..r.n_fields())
        .map(|i| (FIELDS[i], field_tokens(i, 0, REL_MAX[i], false).collect()))
        .collect()
}
