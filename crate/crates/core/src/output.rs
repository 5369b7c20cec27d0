//! Bit-exact output formats: CSV series and JSON result envelopes.
//!
//! Float cells carry 6 significant digits with a `.` decimal separator;
//! lines end in `\n`; the header row is always present. Formatting is
//! canonical: parsing a cell and re-formatting it reproduces the byte
//! sequence, so emitted files are stable round-trip artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Format a float to 6 significant digits in plain decimal notation.
/// Trailing fractional zeros are trimmed; `0` is canonical for zero.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let neg = x < 0.0;
    // 6 significant digits, correctly rounded, via scientific formatting.
    let sci = format!("{:.5e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp >= 5 {
        // Pure integer.
        out.push_str(&digits);
        for _ in 0..(exp - 5) {
            out.push('0');
        }
        return out;
    }
    let body = if exp >= 0 {
        let split = (exp + 1) as usize;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{digits}")
    };
    let trimmed = body.trim_end_matches('0').trim_end_matches('.');
    out.push_str(trimmed);
    out
}

/// A CSV cell: empty for absent values.
pub fn cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Minimal CSV builder with the fixed line discipline.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Tool identification embedded in every envelope.
#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo { name: "dlcsim", version: env!("CARGO_PKG_VERSION") }
    }
}

/// Result envelope: tool version, the fully resolved configuration, and the
/// results payload.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub tool: ToolInfo,
    pub config: C,
    pub results: R,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::numerical(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fmt_sig_examples() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(2.5), "2.5");
        assert_eq!(fmt_sig(1252.5), "1252.5");
        assert_eq!(fmt_sig(0.26275510204), "0.262755");
        assert_eq!(fmt_sig(5.39), "5.39");
        assert_eq!(fmt_sig(1312.5), "1312.5");
        assert_eq!(fmt_sig(-0.1979511839), "-0.197951");
        assert_eq!(fmt_sig(123456789.0), "123457000");
        assert_eq!(fmt_sig(0.000005213), "0.000005213");
        assert_eq!(fmt_sig(999999.4), "999999");
        // Rounding at the significance edge carries into the integer part.
        assert_eq!(fmt_sig(999999.5), "1000000");
    }

    #[test]
    fn csv_shape() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["1".into(), "2.5".into()]);
        csv.row(&["".into(), "0".into()]);
        assert_eq!(csv.finish(), "a,b\n1,2.5\n,0\n");
    }

    proptest! {
        /// Canonical formatting: parse(fmt(x)) formats back to the same
        /// bytes.
        #[test]
        fn fmt_sig_is_idempotent(x in -1.0e7f64..1.0e7) {
            let s1 = fmt_sig(x);
            let parsed: f64 = s1.parse().unwrap();
            let s2 = fmt_sig(parsed);
            prop_assert_eq!(s1, s2);
        }

        /// Formatted value is within 6-significant-digit rounding of the
        /// input.
        #[test]
        fn fmt_sig_accuracy(x in prop::num::f64::NORMAL.prop_filter("range", |v| v.abs() > 1e-12 && v.abs() < 1e12)) {
            let parsed: f64 = fmt_sig(x).parse().unwrap();
            let rel = ((parsed - x) / x).abs();
            prop_assert!(rel < 5e-6, "x={x} formatted {} rel {rel}", fmt_sig(x));
        }
    }
}
