//! CSV and JSON report emission.
//!
//! CSV is canonical. The JSON file mirrors it under `rows`, next to a
//! `manifest` holding the exact config, its hash and the seed list.
//! Nothing time- or host-dependent is written, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{BenchConfig, Format, RawConfig};
use crate::error::Result;

pub const TOOL: &str = "eri-bench";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: RawConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

impl Manifest {
    pub fn new(subcommand: &str, raw: &RawConfig) -> Result<Self> {
        let canonical = serde_json::to_string(raw)?;
        Ok(Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config: raw.clone(),
            config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
            seeds: raw.seeds.clone(),
        })
    }
}

/// Rows as CSV text: header from the row struct's field names, `\n` line
/// endings, shortest round-trip float formatting, empty field for `None`.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Write `<stem>.csv` and/or `<stem>.json` (per the config's formats) plus
/// `manifest.json` into the output directory. `extra` is merged into the
/// JSON document. Returns the written paths.
pub fn emit<T: Serialize>(
    cfg: &BenchConfig,
    manifest: &Manifest,
    stem: &str,
    rows: &[T],
    extra: Option<Value>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.output_dir)?;
    let mut written = Vec::new();
    if cfg.wants(Format::Csv) {
        let path = cfg.output_dir.join(format!("{stem}.csv"));
        write_file(&path, &csv_string(rows)?)?;
        written.push(path);
    }
    if cfg.wants(Format::Json) {
        let mut doc = json!({ "manifest": manifest, "rows": rows });
        if let (Some(Value::Object(more)), Value::Object(map)) = (extra, &mut doc) {
            map.extend(more);
        }
        let path = cfg.output_dir.join(format!("{stem}.json"));
        write_file(&path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        written.push(path);
    }
    let path = cfg.output_dir.join("manifest.json");
    write_file(&path, &(serde_json::to_string_pretty(manifest)? + "\n"))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
        maybe: Option<f64>,
    }

    #[test]
    fn csv_layout() {
        let s =
            csv_string(&[Row { name: "a", value: 0.1, maybe: None }, Row { name: "b", value: 1.0, maybe: Some(-2.5) }])
                .unwrap();
        assert_eq!(s, "name,value,maybe\na,0.1,\nb,1.0,-2.5\n");
    }

    #[test]
    fn manifest_hash_tracks_config() {
        let a = Manifest::new("scm", &RawConfig::default()).unwrap();
        let b = Manifest::new("scm", &RawConfig { n: 123, ..RawConfig::default() }).unwrap();
        assert_eq!(a.config_hash, Manifest::new("scm", &RawConfig::default()).unwrap().config_hash);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.seeds, (0..10).collect::<Vec<_>>());
    }
}
