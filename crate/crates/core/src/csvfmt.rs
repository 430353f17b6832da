//! Text formatting shared by every CSV writer.
//!
//! Floats use the shortest representation that parses back to the same
//! value, so re-reading and re-writing a file reproduces it byte for byte.

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Empty cell for absent values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_bool(b: bool) -> &'static str {
    if b {
        "Y"
    } else {
        "N"
    }
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" | "true" | "1" => Some(true),
        "n" | "no" | "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_opt(s: &str) -> Result<Option<f64>, std::num::ParseFloatError> {
    let s = s.trim();
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}
