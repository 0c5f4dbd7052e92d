//! Float formatting for the structured-text artifacts.
//!
//! Weights and embedding payloads are printed with 17 significant decimal
//! digits, which is enough for any `f64` to parse back to the same bits.

use crate::error::{Error, Result};
use std::fmt::Write;

/// Writes `x` as a JSON number with 17 significant digits.
pub fn push_f64(out: &mut String, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::domain(format!(
            "cannot serialize non-finite value {x}"
        )));
    }
    let x = if x == 0.0 { 0.0 } else { x };
    write!(out, "{x:.16e}").expect("write to String");
    Ok(())
}

pub fn push_f64_array(out: &mut String, xs: &[f64]) -> Result<()> {
    out.push('[');
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_f64(out, x)?;
    }
    out.push(']');
    Ok(())
}

pub fn push_usize_array(out: &mut String, xs: impl IntoIterator<Item = usize>) {
    out.push('[');
    for (i, x) in xs.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x}").expect("write to String");
    }
    out.push(']');
}

/// Reads a JSON array of numbers.
pub fn read_f64_array(v: &serde_json::Value, what: &str, layer: Option<usize>) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(layer, format!("`{what}` is not an array")))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::parse(layer, format!("`{what}` holds a non-number")))
        })
        .collect()
}

pub fn read_usize_array(
    v: &serde_json::Value,
    what: &str,
    layer: Option<usize>,
) -> Result<Vec<usize>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(layer, format!("`{what}` is not an array")))?;
    arr.iter()
        .map(|x| {
            x.as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::parse(layer, format!("`{what}` holds a non-index")))
        })
        .collect()
}

pub fn read_usize(v: &serde_json::Value, key: &str, layer: Option<usize>) -> Result<usize> {
    v.get(key)
        .and_then(|x| x.as_u64())
        .map(|u| u as usize)
        .ok_or_else(|| Error::parse(layer, format!("missing or invalid `{key}`")))
}

pub fn read_f64(v: &serde_json::Value, key: &str, layer: Option<usize>) -> Result<f64> {
    v.get(key)
        .and_then(|x| x.as_f64())
        .ok_or_else(|| Error::parse(layer, format!("missing or invalid `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[
            0.1,
            -2.5e-300,
            1.0 / 3.0,
            6.02214076e23,
            f64::MIN_POSITIVE,
            5e-324,
        ] {
            let mut s = String::new();
            push_f64(&mut s, x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn rejects_nan() {
        assert!(push_f64(&mut String::new(), f64::NAN).is_err());
    }
}
