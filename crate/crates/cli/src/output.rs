//! Output rendering: JSON with floats at 17 significant digits (so files
//! round-trip to the exact doubles that were computed) and small CSV
//! helpers. Identical runs produce byte-identical files.

use std::io::{self, Write};

use serde::Serialize;

/// serde_json formatter that renders every float as `{:.16e}`:
/// 17 significant digits, enough to reconstruct the exact bit pattern.
struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.7e}")
    }
}

/// Serializes to a JSON string with fixed-precision floats and a trailing
/// newline.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// One float cell at 17 significant digits.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `# key = value` comment lines echoing the resolved configuration ahead of
/// CSV content.
pub fn csv_config_header<T: Serialize>(config: &T) -> serde_json::Result<String> {
    let json = serde_json::to_value(config)?;
    let mut out = String::new();
    if let serde_json::Value::Object(map) = &json {
        for (k, v) in map {
            if v.is_null() {
                continue;
            }
            out.push_str(&format!("# {k} = {v}\n"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        #[derive(Serialize)]
        struct S {
            v: f64,
        }
        let v = 0.1_f64 + 0.2_f64;
        let text = to_json_string(&S { v }).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["v"].as_f64().unwrap().to_bits(), v.to_bits());
    }
}
