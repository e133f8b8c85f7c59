use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub files: usize,
}

/// Provenance attached to every report.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        let (sha256, files) = digest_path(path)?;
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256,
            files,
        });
        Ok(())
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// SHA-256 of a file, or of a directory as the sorted list of
/// `relative-path NUL file-digest` lines.
pub fn digest_path(path: &Path) -> Result<(String, usize)> {
    if !path.is_dir() {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok((hex::encode(Sha256::digest(&bytes)), 1));
    }
    let mut files = Vec::new();
    collect_files(path, &mut files).with_context(|| format!("listing {}", path.display()))?;
    let mut rel: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|p| {
            let r = p
                .strip_prefix(path)
                .unwrap_or(&p)
                .to_string_lossy()
                .replace('\\', "/");
            (r, p)
        })
        .collect();
    rel.sort();
    let mut h = Sha256::new();
    for (r, p) in &rel {
        let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        h.update(r.as_bytes());
        h.update([0]);
        h.update(hex::encode(Sha256::digest(&bytes)).as_bytes());
        h.update(b"\n");
    }
    Ok((hex::encode(h.finalize()), rel.len()))
}
