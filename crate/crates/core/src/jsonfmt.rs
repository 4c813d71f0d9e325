//! Canonical JSON formatting helpers.
//!
//! The serializers in this crate are byte-deterministic: object keys are
//! sorted, coordinates carry exactly two decimals, metric values exactly six,
//! and output uses LF line endings. Parsing stays on serde_json; only the
//! writers are hand-rolled so the byte layout is pinned.

use serde_json::Value;

use crate::error::Error;

/// Pixel coordinate with exactly two decimals; negative zero folds to "0.00".
pub fn format_coord(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Metric value with exactly six decimals; negative zero folds away.
pub fn format_metric(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// JSON string literal including the surrounding quotes.
pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{08}' => out.push_str("\\b"),
            '\u{0c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Compact canonical rendering of an arbitrary JSON value (sorted keys).
/// Used for pass-through fields that are preserved verbatim on round trip.
pub fn canonical_value(v: &Value) -> String {
    match v {
        Value::Null => "null".to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => json_string(s),
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(canonical_value).collect();
            format!("[{}]", inner.join(","))
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let inner: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", json_string(k), canonical_value(&map[*k])))
                .collect();
            format!("{{{}}}", inner.join(","))
        }
    }
}

/// Identifier that round-trips as a JSON integer when it looks like one.
/// "17" is emitted as 17; "img_1" or "017" stay strings.
pub fn id_literal(id: &str) -> String {
    let canonical_integer = !id.is_empty()
        && id.bytes().all(|b| b.is_ascii_digit())
        && (id == "0" || !id.starts_with('0'))
        && id.len() <= 18;
    if canonical_integer {
        id.to_string()
    } else {
        json_string(id)
    }
}

/// Maps a serde_json error onto [`Error::Json`], computing the byte offset
/// of the failure position within `input`.
pub fn json_parse_error(err: serde_json::Error, input: &[u8]) -> Error {
    let line = err.line();
    let column = err.column();
    let offset = byte_offset(input, line, column);
    Error::Json { offset, line, column, message: err.to_string() }
}

fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current_line = 1;
    let mut line_start = 0;
    for (i, &b) in input.iter().enumerate() {
        if current_line == line {
            line_start = i;
            break;
        }
        if b == b'\n' {
            current_line += 1;
            line_start = i + 1;
        }
    }
    if current_line < line {
        return input.len();
    }
    (line_start + column.saturating_sub(1)).min(input.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_get_two_decimals() {
        assert_eq!(format_coord(10.0), "10.00");
        assert_eq!(format_coord(3.14159), "3.14");
        assert_eq!(format_coord(-0.001), "0.00");
    }

    #[test]
    fn metrics_get_six_decimals() {
        assert_eq!(format_metric(2.0 / 3.0), "0.666667");
        assert_eq!(format_metric(1.0), "1.000000");
    }

    #[test]
    fn strings_are_escaped() {
        assert_eq!(json_string("a\"b\\c\n"), r#""a\"b\\c\n""#);
    }

    #[test]
    fn integer_like_ids_stay_numeric() {
        assert_eq!(id_literal("17"), "17");
        assert_eq!(id_literal("0"), "0");
        assert_eq!(id_literal("017"), "\"017\"");
        assert_eq!(id_literal("img_1"), "\"img_1\"");
    }

    #[test]
    fn canonical_value_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":[true,null,"x"]}"#).unwrap();
        assert_eq!(canonical_value(&v), r#"{"a":[true,null,"x"],"b":1}"#);
    }

    #[test]
    fn parse_error_reports_byte_offset() {
        let doc = b"{\n  \"a\": nope\n}";
        let err = serde_json::from_slice::<Value>(doc).unwrap_err();
        match json_parse_error(err, doc) {
            Error::Json { offset, line, .. } => {
                assert_eq!(line, 2);
                assert_eq!(&doc[offset - 1..offset], b"n");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
