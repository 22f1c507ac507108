//! Number formatting for the CSV outputs.

/// Formats `x` with `digits` significant digits, switching to exponent
/// notation for very small or very large magnitudes (like C's `%g`).
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let exponent = x.abs().log10().floor() as i32;
    // Rounding can carry into the next decade, e.g. 999999.7 -> 1e6.
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
    let exponent = if rounded.abs() >= 10f64.powi(exponent + 1) {
        exponent + 1
    } else {
        exponent
    };
    if exponent < -4 || exponent >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::significant;

    #[test]
    fn six_digits() {
        assert_eq!(significant(481.9642450856228, 6), "481.964");
        assert_eq!(significant(16.0, 6), "16");
        assert_eq!(significant(13.2, 6), "13.2");
        assert_eq!(significant(0.148207, 6), "0.148207");
        assert_eq!(significant(1.234567e-7, 6), "1.23457e-7");
        assert_eq!(significant(12345678.0, 6), "1.23457e7");
        assert_eq!(significant(999999.7, 6), "1e6");
        assert_eq!(significant(-0.5, 6), "-0.5");
        assert_eq!(significant(0.0, 6), "0");
    }
}
