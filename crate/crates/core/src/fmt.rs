//! Deterministic number formatting for data files.

/// Fixed-point rendering with nine significant digits; scientific notation
/// outside 1e-6 ≤ |x| < 1e15.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..15).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit; the extra trailing digit is harmless.
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".into() } else { t.to_string() }
    } else {
        s
    }
}

/// Empty string for a missing value.
pub fn opt_sig9(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}
