//! Output-directory artifact writer with a hash manifest.
//!
//! Every artifact is written below the configured directory and recorded with
//! its SHA-256; the manifest is emitted last and lists artifacts sorted by
//! name, so identical runs produce byte-identical manifests.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub struct OutDir {
    dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    sha256: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_sha256: &'a str,
    seed: u64,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_stage: Option<&'a str>,
    artifacts: Vec<ManifestEntry<'a>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutDir {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutDir { dir, artifacts: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push((name.to_string(), sha256_hex(content)));
        Ok(())
    }

    /// Write a JSON artifact with the run provenance fields injected at the
    /// top level (payload keys win on collision, which never happens for the
    /// fixed field names used here).
    pub fn write_json(
        &mut self,
        name: &str,
        config_sha256: &str,
        seed: u64,
        payload: serde_json::Value,
    ) -> Result<()> {
        let mut object = serde_json::Map::new();
        object.insert("config_sha256".into(), serde_json::Value::String(config_sha256.into()));
        object.insert("seed".into(), serde_json::json!(seed));
        if let serde_json::Value::Object(map) = payload {
            for (k, v) in map {
                object.insert(k, v);
            }
        } else {
            object.insert("value".into(), payload);
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(object))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write a CSV artifact with a provenance comment line on top.
    pub fn write_csv(
        &mut self,
        name: &str,
        config_sha256: &str,
        seed: u64,
        body: &str,
    ) -> Result<()> {
        let text = format!("# config_sha256={config_sha256} seed={seed}\n{body}");
        self.write(name, text.as_bytes())
    }

    /// Emit `manifest.json`; call once, after the last artifact.
    pub fn finish(
        mut self,
        config_sha256: &str,
        seed: u64,
        failed_stage: Option<&str>,
    ) -> Result<()> {
        self.artifacts.sort();
        let manifest = Manifest {
            config_sha256,
            seed,
            status: if failed_stage.is_some() { "failed" } else { "ok" },
            failed_stage,
            artifacts: self
                .artifacts
                .iter()
                .map(|(n, h)| ManifestEntry { name: n, sha256: h })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}
