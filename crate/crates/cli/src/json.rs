//! JSON values with numbers rounded to 12 significant digits. Keys come out
//! sorted because `serde_json::Map` is ordered by key.

use ellip_core::GEllipsoid;
use nalgebra::{DMatrix, DVector};
use serde_json::{Map, Value};

pub const SIG_DIGITS: usize = 12;

/// Non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        return Value::String("nan".into());
    }
    if x.is_infinite() {
        return Value::String(if x > 0.0 { "inf" } else { "-inf" }.into());
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn nums<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::Array(xs.into_iter().map(|&x| num(x)).collect())
}

pub fn vector(v: &DVector<f64>) -> Value {
    nums(v.iter())
}

/// Row-major nested arrays.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| nums(r.iter())).collect())
}

pub fn ellipsoid(e: &GEllipsoid) -> Value {
    let s = e.signature();
    let mut m = Map::new();
    m.insert("center".into(), vector(e.center()));
    m.insert("radii".into(), vector(e.radii()));
    m.insert("axes".into(), Value::Array(e.frame().column_iter().map(|c| nums(c.iter())).collect()));
    m.insert("signature".into(), serde_json::json!([s.n_pos, s.n_zero, s.n_inf]));
    Value::Object(m)
}

/// Builds an object from `(key, value)` pairs.
pub fn obj<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(num(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(num(1.0).to_string(), "1.0");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn keys_are_sorted() {
        let v = obj([("zeta", num(1.0)), ("alpha", num(2.0))]);
        assert_eq!(v.to_string(), r#"{"alpha":2.0,"zeta":1.0}"#);
    }
}
