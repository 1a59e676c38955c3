#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_nlp-select");

/// Runs the binary with `args`; thread settings from the caller's
/// environment are cleared so tests control them explicitly.
pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("NLP_SELECT_THREADS").output().expect("binary runs")
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("NLP_SELECT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates `value` against a schema shipped in `docs/`.
pub fn assert_schema(schema: &str, value: &serde_json::Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(schema);
    let schema = read_json(&path);
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema} violations: {errors:?}");
}

/// True if any number in the JSON tree is missing where one is required:
/// serde_json writes non-finite floats as `null`, so NaN shows up there.
pub fn has_null_number(value: &serde_json::Value, allowed: &[&str]) -> Option<String> {
    fn walk(v: &serde_json::Value, key: &str, allowed: &[&str]) -> Option<String> {
        match v {
            serde_json::Value::Null if !allowed.contains(&key) => Some(key.to_owned()),
            serde_json::Value::Array(a) => a.iter().find_map(|x| walk(x, key, allowed)),
            serde_json::Value::Object(o) => o.iter().find_map(|(k, x)| walk(x, k, allowed)),
            _ => None,
        }
    }
    walk(value, "", allowed)
}

/// Deterministic logistic data in the combined CSV format, written by hand
/// so the binary's own simulator is not involved.
pub fn logistic_csv(n: usize, p: usize, beta: &[f64], seed: u64) -> String {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut text = String::from("y");
    for j in 1..=p {
        text.push_str(&format!(",x{j}"));
    }
    text.push('\n');
    for _ in 0..n {
        let x: Vec<f64> = (0..p)
            .map(|_| {
                // Box–Muller.
                let (u1, u2) = (uniform().max(1e-300), uniform());
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        let y = u8::from(uniform() < 1.0 / (1.0 + (-eta).exp()));
        text.push_str(&y.to_string());
        for v in &x {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    text
}
