//! Shared numeric formatting for machine-readable outputs.

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap()
}

/// Shortest decimal form of the 9-significant-digit rounding of `x`.
pub fn format_sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}
