use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discretization::Field2D;
use crate::error::{Result, TicError};

#[derive(Debug, Clone)]
pub enum Artifact {
    /// Written as `<name>.csv` plus a `<name>.json` sidecar with grid and metadata.
    Field { name: String, field: Field2D, meta: serde_json::Value },
    /// Written as `<name>.json`.
    Json { name: String, value: serde_json::Value },
    /// Written verbatim as `<name>`.
    Text { name: String, contents: String },
}

impl Artifact {
    pub fn field(name: impl Into<String>, field: &Field2D, meta: serde_json::Value) -> Self {
        Artifact::Field { name: name.into(), field: field.clone(), meta }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        let value = serde_json::to_value(value).map_err(|e| TicError::config(format!("cannot serialize artifact: {e}")))?;
        Ok(Artifact::Json { name: name.into(), value })
    }

    pub fn text(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Artifact::Text { name: name.into(), contents: contents.into() }
    }

    fn name(&self) -> &str {
        match self {
            Artifact::Field { name, .. } | Artifact::Json { name, .. } | Artifact::Text { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn hash_of(&self, file: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.file == file).map(|e| e.sha256.as_str())
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn pretty(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| TicError::config(format!("cannot serialize artifact: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes every artifact into `out_dir` and a `manifest.json` listing
/// each file with its SHA-256.
pub fn export_results(artifacts: &[Artifact], out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| TicError::io(out_dir, e))?;
    let mut files: Vec<(String, Vec<u8>, &'static str)> = Vec::new();
    for a in artifacts {
        let name = a.name();
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') || name == MANIFEST_FILE {
            return Err(TicError::usage(format!("artifact name `{name}` is not a plain file name")));
        }
        match a {
            Artifact::Field { field, meta, .. } => {
                files.push((format!("{name}.csv"), field.to_csv_string().into_bytes(), "field"));
                let sidecar = serde_json::json!({
                    "grid": field.grid(),
                    "start_level": field.start(),
                    "end_level": field.end(),
                    "meta": meta,
                });
                files.push((format!("{name}.json"), pretty(&sidecar)?, "sidecar"));
            }
            Artifact::Json { value, .. } => files.push((format!("{name}.json"), pretty(value)?, "json")),
            Artifact::Text { contents, .. } => files.push((name.to_string(), contents.clone().into_bytes(), "text")),
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for (file, _, _) in &files {
        if !seen.insert(file.clone()) {
            return Err(TicError::usage(format!("two artifacts write `{file}`")));
        }
    }
    let mut manifest = Manifest::default();
    for (file, bytes, kind) in files {
        let path = out_dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| TicError::io(&path, e))?;
        manifest.entries.push(ManifestEntry { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64, file, kind: kind.into() });
    }
    manifest.entries.sort_by(|a, b| a.file.cmp(&b.file));
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, pretty(&manifest)?).map_err(|e| TicError::io(&path, e))?;
    Ok(manifest)
}
