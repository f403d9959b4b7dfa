//! Serialisation helpers. Floats are written with 17 significant digits so
//! every value survives a text round trip bit for bit.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

struct SigFigs;

impl Formatter for SigFigs {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `{:.16e}`, i.e. 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact JSON with 17-digit floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, SigFigs);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let xs = [0.1, 1.0 / 3.0, 0.8814985404743088, -2.5e-300, 9.247955e6, 0.0, -0.0, f64::MAX, f64::MIN_POSITIVE];
        let s = to_json(&xs.to_vec()).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} -> {b}");
        }
        assert!(s.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn integers_and_non_finite() {
        let s = to_json(&(3usize, f64::NAN)).unwrap();
        assert_eq!(s, "[3,null]");
    }
}
