//! Fixed float formatting shared by every text output.

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Like [`fmt_f64`] but renders `None` as an empty field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.5067715750178609), "5.0677157501786085e-1");
        assert_eq!(fmt_opt(None), "");
    }

    proptest! {
        #[test]
        fn round_trips_bit_exact(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
