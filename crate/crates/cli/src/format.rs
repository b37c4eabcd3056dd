//! Energies with their confidence radius in parenthesis notation.

/// Decimal places never exceed this, so an exactly zero radius prints as
/// a run of zeros rather than every digit of the mean.
pub const MAX_DECIMALS: i32 = 6;

/// Formats `value` to the decimal place of the leading digit of `radius`,
/// with that digit in parentheses: `(-7.4772, 0.0081)` becomes
/// `-7.477(8)`. Radii that round up to 10 move one place left.
pub fn with_uncertainty(value: f64, radius: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    let radius = if radius.is_finite() { radius.abs() } else { f64::INFINITY };
    if radius.is_infinite() {
        return format!("{value:.0}(inf)");
    }
    let mut decimals = if radius > 0.0 { (-radius.log10().floor()) as i32 } else { MAX_DECIMALS };
    decimals = decimals.min(MAX_DECIMALS);
    let mut digit = (radius * 10f64.powi(decimals)).round();
    if digit >= 10.0 && decimals > i32::MIN {
        decimals -= 1;
        digit = (radius * 10f64.powi(decimals)).round();
    }
    if decimals <= 0 {
        // the radius covers whole units; print it in full
        let scale = 10f64.powi(-decimals);
        let v = (value / scale).round() * scale;
        return format!("{v:.0}({:.0})", digit * scale);
    }
    format!("{value:.prec$}({digit:.0})", prec = decimals as usize)
}
