//! JSON with fixed 17-significant-digit floats, plus small text helpers.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

/// `%.17g`-style rendering that always reads back as a float.
pub fn g17(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{v:.prec$}", prec = (16 - exp) as usize);
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.')
        } else {
            &fixed
        };
        if trimmed.contains('.') {
            trimmed.to_string()
        } else {
            format!("{trimmed}.0")
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

struct G17Formatter;

impl Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(g17(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes `body` plus a trailing newline to `path`, or to stdout.
pub fn emit(path: Option<&Path>, body: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{body}\n")),
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{body}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_examples() {
        assert_eq!(g17(0.0), "0.0");
        assert_eq!(g17(0.75), "0.75");
        assert_eq!(g17(2.0), "2.0");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(1.5e-7), "1.4999999999999999e-7");
        assert_eq!(g17(123456.0), "123456.0");
        assert_eq!(g17(1e20), "1e20");
        for v in [0.1, 1.0 / 3.0, 6.02e23, -4.2e-9, 0.5 + 1.9e-6] {
            assert_eq!(g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_uses_g17() {
        let s = to_json(&serde_json::json!({"a": 0.0, "b": [0.1, 2]})).unwrap();
        assert_eq!(s, r#"{"a":0.0,"b":[0.10000000000000001,2]}"#);
    }
}
