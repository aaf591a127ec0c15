//! Time-value codecs.

pub mod calendar;
pub mod quant;
pub mod simple;

/// Formats `<|{name}_{value}|>` with `value` zero-padded to `width` digits.
pub(crate) fn special(name: &str, value: u64, width: usize) -> String {
    format!("<|{name}_{value:0width$}|>")
}

/// Parses `<|{name}_{digits}|>` where `digits` has exactly `width` ASCII digits.
pub(crate) fn parse_special(token: &str, name: &str, width: usize) -> Option<u64> {
    let body = token.strip_prefix("<|")?.strip_suffix("|>")?;
    let digits = body.strip_prefix(name)?.strip_prefix('_')?;
    if digits.len() != width || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}
