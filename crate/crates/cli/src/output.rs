//! Deterministic JSON and CSV output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

use adoption_core::Error;

/// Significant digits kept for every float in JSON output.
const SIG_DIGITS: usize = 10;

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys, floats cut to ten significant digits and
/// non-finite floats as `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    let v = serde_json::to_value(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let mut s = serde_json::to_string_pretty(&normalize(v)).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Tidy `series,t,value` rows for external plotting.
pub fn plot_csv(rows: &[(&str, Vec<(f64, f64)>)]) -> String {
    let mut s = String::from("series,t,value\n");
    for (name, pts) in rows {
        for (t, v) in pts {
            s.push_str(&format!("{name},{t},{v}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn keys_sorted_and_floats_rounded() {
        let mut m = HashMap::new();
        m.insert("zeta", 1.0 / 3.0);
        m.insert("alpha", f64::NAN);
        m.insert("mid", 2.0);
        let s = to_json(&m).unwrap();
        assert_eq!(s, "{\n  \"alpha\": null,\n  \"mid\": 2.0,\n  \"zeta\": 0.3333333333\n}\n");
    }

    #[test]
    fn integers_untouched() {
        assert_eq!(to_json(&vec![12345678901234u64]).unwrap(), "[\n  12345678901234\n]\n");
    }
}
