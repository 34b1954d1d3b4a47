//! Fixed `%.17g` float formatting shared by every CSV and JSON export.
//!
//! Seventeen significant digits round-trip any `f64`, and a fixed format
//! (rather than shortest-representation) keeps exports byte-identical across
//! toolchains.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Formats `x` exactly like C's `printf("%.17g", x)`.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    const PRECISION: i32 = 17;
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// An `f64` that serializes to JSON as a `%.17g` number literal.
///
/// Non-finite values serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct G17(pub f64);

impl From<f64> for G17 {
    fn from(x: f64) -> Self {
        G17(x)
    }
}

impl Serialize for G17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let number: serde_json::Number = g17(self.0).parse().map_err(serde::ser::Error::custom)?;
        number.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for G17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Option::<serde_json::Number>::deserialize(deserializer)?;
        match value {
            None => Ok(G17(f64::NAN)),
            Some(n) => n
                .as_f64()
                .map(G17)
                .ok_or_else(|| serde::de::Error::custom("number out of f64 range")),
        }
    }
}

pub fn g17_vec(xs: &[f64]) -> Vec<G17> {
    xs.iter().copied().map(G17).collect()
}
