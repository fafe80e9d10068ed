//! Deterministic product files: CSV with self-describing `#` headers, JSON
//! reports, and a manifest carrying a content hash per file.
//!
//! Determinism contract: identical configs produce byte-identical files.
//! Floats are rendered with the shortest round-trip exponent form, headers
//! carry the config hash and convention, and the only line allowed to differ
//! across tool versions is the `# tool:` line (golden comparisons strip it).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use gravispin_core::JzConvention;

use crate::error::{CliError, Result};
use crate::{TOOL_NAME, TOOL_VERSION};

/// Short content hash used in headers and the manifest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hash of a serializable config; first 12 hex characters are plenty for
/// identifying a run.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serialization cannot fail");
    sha256_hex(json.as_bytes())[..12].to_string()
}

/// Shortest round-trip float rendering, stable across runs.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:e}")
}

/// Collects product files for one run, refusing to overwrite without consent
/// and emitting the manifest at the end.
pub struct RunWriter {
    dir: PathBuf,
    force: bool,
    config_hash: String,
    convention: JzConvention,
    seed: u64,
    files: Vec<(String, String)>, // (name, sha256)
}

impl RunWriter {
    pub fn create(
        dir: &Path,
        force: bool,
        config_hash: String,
        convention: JzConvention,
        seed: u64,
    ) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            force,
            config_hash,
            convention,
            seed,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn convention(&self) -> JzConvention {
        self.convention
    }

    /// Standard `#` header lines for CSV products.
    pub fn csv_header(&self, product: &str, n: Option<u32>, extra: &[String]) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {TOOL_NAME} {product}\n"));
        match n {
            Some(n) => out.push_str(&format!(
                "# n={n} convention={} config={}\n",
                self.convention.name(),
                self.config_hash
            )),
            None => out.push_str(&format!(
                "# convention={} config={}\n",
                self.convention.name(),
                self.config_hash
            )),
        }
        for line in extra {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(&format!("# tool: {TOOL_NAME} {TOOL_VERSION}\n"));
        out
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if path.exists() && !self.force {
            return Err(CliError::Config(format!(
                "refusing to overwrite {} (use --force)",
                path.display()
            )));
        }
        let mut f = fs::File::create(&path).map_err(CliError::io(path.display().to_string()))?;
        f.write_all(bytes).map_err(CliError::io(path.display().to_string()))?;
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(path)
    }

    /// JSON product with the run identification folded in: every report
    /// carries `tool`, `config_hash`, and `convention` alongside its payload.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let payload = serde_json::to_value(value)
            .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        let tagged = match payload {
            serde_json::Value::Object(map) => {
                let mut out = serde_json::Map::new();
                out.insert("tool".into(), format!("{TOOL_NAME} {TOOL_VERSION}").into());
                out.insert("config_hash".into(), self.config_hash.clone().into());
                out.insert("convention".into(), self.convention.name().into());
                out.extend(map);
                serde_json::Value::Object(out)
            }
            other => other,
        };
        let mut text = serde_json::to_string_pretty(&tagged)
            .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// JSON in an externally pinned wire format (no run identification keys);
    /// used for state snapshots, whose schema is fixed.
    pub fn write_json_raw<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes the manifest and returns the list of produced files.
    pub fn finish(mut self) -> Result<Vec<String>> {
        #[derive(Serialize)]
        struct ManifestFile<'a> {
            path: &'a str,
            sha256: &'a str,
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: String,
            config_hash: &'a str,
            convention: &'a str,
            seed: u64,
            files: Vec<ManifestFile<'a>>,
        }
        self.files.sort();
        let manifest = Manifest {
            tool: format!("{TOOL_NAME} {TOOL_VERSION}"),
            config_hash: &self.config_hash,
            convention: self.convention.name(),
            seed: self.seed,
            files: self
                .files
                .iter()
                .map(|(p, h)| ManifestFile { path: p, sha256: h })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Config(format!("serializing manifest: {e}")))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        if path.exists() && !self.force {
            return Err(CliError::Config(format!(
                "refusing to overwrite {} (use --force)",
                path.display()
            )));
        }
        fs::write(&path, text).map_err(CliError::io(path.display().to_string()))?;
        let mut names: Vec<String> = self.files.into_iter().map(|(p, _)| p).collect();
        names.push("manifest.json".into());
        Ok(names)
    }
}

/// A labeled CSV column set rendered deterministically.
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn render(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Strips lines beginning with `# tool:` for golden-file comparison.
pub fn strip_tool_line(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# tool:"))
        .collect::<Vec<_>>()
        .join("\n")
}
