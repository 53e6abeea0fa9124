//! Canonical JSON text (sorted keys, normalized numbers) and its SHA-256.

use serde_json::Value;
use sha2::{Digest, Sha256};

/// Integers below 2^53 print without a fraction, so `1`, `1.0` and `1e0`
/// agree; other numbers use the shortest round-trip form.
fn number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    let x = n.as_f64().unwrap_or(f64::NAN);
    if x.fract() == 0.0 && x.abs() < 9_007_199_254_740_992.0 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

fn write(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write(&m[k], out);
            }
            out.push('}');
        }
    }
}

pub fn canonical(v: &Value) -> String {
    let mut s = String::new();
    write(v, &mut s);
    s
}

pub fn config_hash(v: &Value) -> String {
    let digest = Sha256::digest(canonical(v).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn formatting_does_not_matter() {
        let a: Value = serde_json::from_str("{\"b\": 1.0, \"a\": [0.25, 2e0]}").unwrap();
        let b: Value = serde_json::from_str("{ \"a\": [0.25, 2], \"b\": 1 }").unwrap();
        assert_eq!(canonical(&a), "{\"a\":[0.25,2],\"b\":1}");
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&json!({"a": [0.25, 2], "b": 2})));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
