//! Result writers. Every file starts with a provenance header: tool version,
//! seed and a SHA-256 of the effective configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Result;

pub const TOOL: &str = "ddtune";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a CSV column layout changes.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Header {
    /// Hash of the compact JSON form of `config`; object keys are sorted,
    /// so equal configs hash equally whatever their source order.
    pub fn new(seed: u64, config: &impl Serialize) -> Result<Self> {
        let value = serde_json::to_value(config)?;
        let bytes = serde_json::to_vec(&value)?;
        Ok(Header {
            tool: TOOL.into(),
            version: VERSION.into(),
            seed,
            config_hash: hex::encode(Sha256::digest(&bytes)),
        })
    }

    /// `# ddtune 0.1.0 seed=7 config=sha256:… schema=1`
    pub fn line(&self) -> String {
        format!(
            "# {} {} seed={} config=sha256:{} schema={CSV_SCHEMA}",
            self.tool, self.version, self.seed, self.config_hash
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": self.tool,
            "version": self.version,
            "seed": self.seed,
            "config_hash": format!("sha256:{}", self.config_hash),
            "schema": CSV_SCHEMA,
        })
    }
}

/// CSV text: header comment line, column names, rows.
pub fn csv_string(header: &Header, columns: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    let mut out = header.line();
    out.push('\n');
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_csv(path: &Path, header: &Header, columns: &[String], rows: &[Vec<String>]) -> Result<()> {
    write_text(path, &csv_string(header, columns, rows)?)
}

/// `{"header": …, "result": …}`, pretty-printed.
pub fn json_string(header: &Header, result: &impl Serialize) -> Result<String> {
    let doc = json!({ "header": header.to_json(), "result": serde_json::to_value(result)? });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, header: &Header, result: &impl Serialize) -> Result<()> {
    write_text(path, &json_string(header, result)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Shortest decimal that parses back to the same `f64`; `inf`/`-inf`/`nan` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}
