//! Irrep labels and output options from the command line.

use std::fmt;

use so5::IrrepLabel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parse a non-negative half-integer given as `3`, `3/2` or `1.5`; returns
/// twice its value.
pub fn parse_half_integer(text: &str) -> Result<u32, UsageError> {
    let t = text.trim();
    let bad = || {
        usage(format!(
            "`{}` is not a non-negative integer or half-integer",
            text
        ))
    };
    if t.is_empty() || t.starts_with('-') || t.starts_with('+') {
        return Err(bad());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num: u32 = num.trim().parse().map_err(|_| bad())?;
        return match den.trim() {
            "1" => num.checked_mul(2).ok_or_else(bad),
            "2" => Ok(num),
            _ => Err(bad()),
        };
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let whole: u32 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        let half = match frac {
            "" => 0,
            "5" => 1,
            _ => return Err(bad()),
        };
        return whole.checked_mul(2).map(|w| w + half).ok_or_else(bad);
    }
    let n: u32 = t.parse().map_err(|_| bad())?;
    n.checked_mul(2).ok_or_else(bad)
}

/// `(v, f)` from strings; `v` must be a non-negative integer.
pub fn parse_irrep_arg(v: &str, f: &str) -> Result<IrrepLabel, UsageError> {
    let v: u32 = v
        .trim()
        .parse()
        .map_err(|_| usage(format!("v = `{}` is not a non-negative integer", v)))?;
    let two_f = parse_half_integer(f).map_err(|e| usage(format!("f: {}", e)))?;
    Ok(IrrepLabel::new(v, two_f))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

/// How results are written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputSpec {
    pub format: Format,
    /// Decimal digits for floats, 1 to 15.
    pub precision: usize,
    pub exact: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            format: Format::Text,
            precision: 6,
            exact: true,
        }
    }
}
