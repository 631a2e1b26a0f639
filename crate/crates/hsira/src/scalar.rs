//! Complex literals such as `0.05+0.5i`.

use hsira_core::C64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse complex number {0:?} (expected forms like `-24`, `0.5i` or `0.05+0.5i`)")]
pub struct ParseComplexError(pub String);

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`; `i` alone stands for `1i`.
pub fn parse_complex(text: &str) -> Result<C64, ParseComplexError> {
    let err = || ParseComplexError(text.into());
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().and_then(finite).map(|re| C64::new(re, 0.0)).ok_or_else(err);
    };
    // split at the last sign that does not belong to an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => t.parse().map_err(|_| err())?,
    };
    let re: f64 = re_text.parse().map_err(|_| err())?;
    match (finite(re), finite(im)) {
        (Some(re), Some(im)) => Ok(C64::new(re, im)),
        _ => Err(err()),
    }
}

/// Inverse of [`parse_complex`] for finite values.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:e}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{:e}-{:e}i", z.re, -z.im)
    } else {
        format!("{:e}+{:e}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_shifts() {
        assert_eq!(parse_complex("-24").unwrap(), C64::new(-24.0, 0.0));
        assert_eq!(parse_complex("0.05+0.5i").unwrap(), C64::new(0.05, 0.5));
        assert_eq!(parse_complex("0.4+1.3i").unwrap(), C64::new(0.4, 1.3));
    }

    #[test]
    fn other_forms() {
        assert_eq!(parse_complex("2.5i").unwrap(), C64::new(0.0, 2.5));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2E+1i").unwrap(), C64::new(1e-3, -20.0));
        assert_eq!(parse_complex(" 3 - 4i ").unwrap(), C64::new(3.0, -4.0));
    }

    #[test]
    fn malformed_rejected() {
        for bad in ["1+", "", "i2", "1+2", "abc", "1++2i", "nan", "inf+1i", "1+2j"] {
            assert!(parse_complex(bad).is_err(), "{bad:?} accepted");
        }
    }

    proptest! {
        #[test]
        fn format_round_trips(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = C64::new(re, im);
            prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }
}
