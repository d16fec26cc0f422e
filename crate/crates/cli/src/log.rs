//! JSON Lines diagnostics on standard error.

use serde::Serialize;
use serde_json::{json, Value};

pub fn event(name: &str, fields: impl Serialize) {
    let mut line = json!({ "event": name });
    if let (Some(obj), Ok(Value::Object(extra))) =
        (line.as_object_mut(), serde_json::to_value(fields))
    {
        obj.extend(extra);
    }
    eprintln!("{line}");
}

pub fn warn(message: &str) {
    eprintln!("{}", json!({ "event": "warning", "message": message }));
}

pub fn error(message: &str) {
    eprintln!("{}", json!({ "event": "error", "message": message }));
}
