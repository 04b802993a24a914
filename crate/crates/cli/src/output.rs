//! Number formatting, CSV/JSON emission and input hashing.

use crate::CliError;
use hypsym::identities::SuiteRow;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const OUT_ENV: &str = "HYPSYM_OUT";

/// C's `%.15g`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..15).contains(&exp) {
        trim_zeros(&format!("{:.*}", (14 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// Rounds every float in `v` to 15 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = format!("{x:.14e}").parse().expect("round trip");
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// `--out`, then `$HYPSYM_OUT`, then the working directory.
pub fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Common shape of every JSON report.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub version: &'static str,
    pub inputs: Value,
    pub input_hash: String,
    pub passed: bool,
    pub rows: Vec<SuiteRow>,
    pub result: Value,
}

impl Envelope {
    pub fn new(command: &str, inputs: Value, extra_inputs: &[&[u8]], rows: Vec<SuiteRow>, result: Value) -> Self {
        let canonical = serde_json::to_vec(&round_json(inputs.clone())).expect("serialisable");
        let mut parts: Vec<&[u8]> = vec![command.as_bytes(), &canonical];
        parts.extend_from_slice(extra_inputs);
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            input_hash: sha256_hex(&parts),
            passed: rows.iter().all(|r| r.passed),
            inputs,
            rows,
            result,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let v = round_json(to_value(self));
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }
}

pub fn row(benchmark: &str, check: &str, passed: bool, value: f64, threshold: f64, note: impl Into<String>) -> SuiteRow {
    SuiteRow { benchmark: benchmark.into(), check: check.into(), passed, value, threshold, note: note.into() }
}

pub fn label(p: &hypsym::ProblemParams) -> String {
    format!("({},{},{},{})", p.n, fmt_g(p.p), fmt_g(p.q), fmt_g(p.lambda))
}
