use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::opts::Opts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERIA: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// A failure that ends the command with a report and a nonzero exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub exit: i32,
    pub details: Value,
}

impl Failure {
    pub fn input(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            exit: EXIT_INPUT,
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl From<mdpconc::Error> for Failure {
    fn from(e: mdpconc::Error) -> Self {
        Self::input(e.code(), e.to_string())
    }
}

/// What a command produced: a JSON result, an optional CSV table, and
/// whether its pass criteria held.
pub struct Outcome {
    pub result: Value,
    pub csv: Option<String>,
    pub passed: bool,
}

impl Outcome {
    pub fn ok(result: Value) -> Self {
        Self {
            result,
            csv: None,
            passed: true,
        }
    }
}

pub fn to_value<S: Serialize>(x: &S) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("write to string");
    }
    out
}

/// Report envelope. `serde_json::Map` is ordered by key, so the rendered
/// text is independent of insertion order.
pub fn envelope(command: &str, opts: &Opts, model_sha256: Option<&str>, body: std::result::Result<&Outcome, &Failure>) -> (Value, i32) {
    let (status, exit, payload) = match body {
        Ok(o) if o.passed => ("ok", EXIT_OK, json!({ "result": o.result })),
        Ok(o) => ("criteria_failed", EXIT_CRITERIA, json!({ "result": o.result })),
        Err(f) => (
            "error",
            f.exit,
            json!({ "error": { "code": f.code, "message": f.message, "details": f.details } }),
        ),
    };
    let mut report = json!({
        "command": command,
        "config": to_value(opts),
        "model_sha256": model_sha256,
        "status": status,
        "exit_code": exit,
        "tool": { "name": "mdpconc", "version": env!("CARGO_PKG_VERSION") },
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, payload) {
        dst.extend(src);
    }
    (report, exit)
}

pub fn render(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("json renders");
    s.push('\n');
    s
}

/// Minimal CSV writer for numeric tables; fields never contain separators.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
