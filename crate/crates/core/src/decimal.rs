//! Decimal text for numeric output.
//!
//! Every number written to CSV or JSON carries 17 significant digits, which
//! round-trips an `f64` exactly.

use std::str::FromStr;

use serde_json::{Number, Value};

pub fn decimal(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of reports
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// A JSON number with 17 significant digits, or `null` for non-finite input.
pub fn json_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&decimal(x)).expect("formatted float is valid JSON"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 6.02e23, 0.0] {
            let s = decimal(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(char::is_ascii_digit)
                .count();
            assert!(digits >= 15, "{s}");
        }
    }

    #[test]
    fn json_keeps_digits() {
        let v = json_number(0.5);
        assert_eq!(serde_json::to_string(&v).unwrap(), "5.0000000000000000e-1");
        assert_eq!(json_number(f64::NAN), Value::Null);
    }
}
