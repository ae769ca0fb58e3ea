//! Payload and manifest writing.
//!
//! Payloads (CSV or JSON) are pure functions of the command parameters
//! and seed; wall-clock data lives only in the manifest, which pairs
//! every output file with the full parameter set and a SHA-256 digest of
//! the payload bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use percolab::montecarlo::Estimate;
use percolab::RngSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct ManifestOutput {
    path: PathBuf,
    bytes: usize,
    sha256: String,
}

/// Sidecar metadata for one CLI invocation. Timestamps are excluded
/// from the digests: rerunning the same command and seed reproduces the
/// payload bytes exactly, while the manifest records when it happened.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    command: String,
    params: serde_json::Value,
    rng: RngSpec,
    workers: usize,
    version: &'static str,
    started: String,
    finished: String,
    outputs: Vec<ManifestOutput>,
}

fn rfc3339(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Writes the payload to `--out` (plus `<out>.manifest.json`), or to
/// stdout when no path was given.
pub fn emit(
    out: Option<&Path>,
    command: &str,
    params: serde_json::Value,
    rng: RngSpec,
    payload: &str,
    started: DateTime<Utc>,
) -> anyhow::Result<()> {
    match out {
        None => {
            print!("{payload}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, payload).with_context(|| format!("writing {}", path.display()))?;
            let manifest = RunManifest {
                command: command.to_string(),
                params,
                rng,
                version: env!("CARGO_PKG_VERSION"),
                started: rfc3339(started),
                finished: rfc3339(Utc::now()),
                outputs: vec![ManifestOutput {
                    path: path.to_path_buf(),
                    bytes: payload.len(),
                    sha256: hex::encode(Sha256::digest(payload.as_bytes())),
                }],
            };
            let manifest_path = manifest_path(path);
            let text = serde_json::to_string_pretty(&manifest)?;
            fs::write(&manifest_path, text)
                .with_context(|| format!("writing {}", manifest_path.display()))?;
            eprintln!("wrote {} and {}", path.display(), manifest_path.display());
            Ok(())
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// One CSV row in the shared estimate schema, with optional leading key
/// columns (rectangle, radius, ...).
pub fn estimate_row(buf: &mut String, keys: &[String], p: f64, est: &Estimate) {
    for k in keys {
        let _ = write!(buf, "{k},");
    }
    let _ = writeln!(
        buf,
        "{p},{},{},{},{},{}",
        est.p_hat, est.ci_low, est.ci_high, est.n, est.seed
    );
}

pub fn estimate_header(buf: &mut String, keys: &[&str]) {
    for k in keys {
        let _ = write!(buf, "{k},");
    }
    let _ = writeln!(buf, "p,estimate,ci_low,ci_high,n,seed");
}

/// JSON envelope shared by all estimating subcommands.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: &'static str,
    pub params: serde_json::Value,
    pub rng: RngSpec,
    pub data: T,
}

pub fn to_json_pretty<T: Serialize>(envelope: &Envelope<T>) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(envelope)?;
    s.push('\n');
    Ok(s)
}
