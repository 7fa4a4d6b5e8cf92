//! Small shared formatting helpers for CSV emission.

/// Formats a float with 9 significant digits in scientific notation.
///
/// All CSV cells go through this so that re-runs diff byte-identically.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Formats a float with two decimals (fixed point).
pub fn fmt_2dec(x: f64) -> String {
    format!("{x:.2}")
}
