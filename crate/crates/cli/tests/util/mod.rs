//! Shared helpers for CLI integration tests: binary invocation and a small
//! structural validator for the shipped JSON schemas (type / required /
//! properties / items / enum / $ref subset — all these schemas use).

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpperiod"))
}

pub fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

pub fn load_schema(name: &str) -> Value {
    let path = schema_dir().join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).expect("schema file readable"))
        .expect("schema file is JSON")
}

fn resolve<'a>(root: &'a Value, schema: &'a Value) -> &'a Value {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        // either "#/definitions/x" or "other.schema.json#/definitions/x"
        let (file, frag) = match r.split_once('#') {
            Some((f, frag)) => (f, frag),
            None => ("", r),
        };
        let base = if file.is_empty() {
            root.clone()
        } else {
            load_schema(file)
        };
        let mut cur = base;
        for part in frag.trim_start_matches('/').split('/') {
            if part.is_empty() {
                continue;
            }
            cur = cur.get(part).expect("schema $ref resolves").clone();
        }
        // leak a copy so lifetimes stay simple in test code
        return Box::leak(Box::new(cur));
    }
    schema
}

fn type_matches(ty: &str, value: &Value) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        "number" => value.is_number(),
        "null" => value.is_null(),
        other => panic!("unhandled schema type {other}"),
    }
}

pub fn validate(root: &Value, schema: &Value, value: &Value, at: &str) -> Result<(), String> {
    let schema = resolve(root, schema);
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(s) => type_matches(s, value),
            Value::Array(options) => options
                .iter()
                .any(|t| type_matches(t.as_str().expect("type entry"), value)),
            _ => panic!("bad type at {at}"),
        };
        if !ok {
            return Err(format!("{at}: value {value} does not match type {ty}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{at}: {value} not in enum {allowed:?}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required {
            let key = key.as_str().expect("required entry");
            if value.get(key).is_none() {
                return Err(format!("{at}: missing required key '{key}'"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        if let Some(obj) = value.as_object() {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    validate(root, sub, v, &format!("{at}.{key}"))?;
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                validate(root, items, v, &format!("{at}[{i}]"))?;
            }
        }
    }
    Ok(())
}

pub fn assert_valid(schema_name: &str, value: &Value) {
    let schema = load_schema(schema_name);
    if let Err(e) = validate(&schema, &schema, value, "$") {
        panic!("{schema_name} validation failed: {e}\nvalue: {value}");
    }
}

/// Recursively null out `timing` objects so outputs can be compared across
/// runs.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            for (_, child) in map.iter_mut() {
                strip_timing(child);
            }
        }
        Value::Array(items) => {
            for child in items {
                strip_timing(child);
            }
        }
        _ => {}
    }
}
