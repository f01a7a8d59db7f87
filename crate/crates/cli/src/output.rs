//! Output files and the run manifest.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct LapDisclosure {
    pub label: String,
    pub window: (f64, f64),
    pub im_floor: f64,
    pub level_spacing: f64,
}

#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub lap: Vec<LapDisclosure>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn disclose(&mut self, d: LapDisclosure) {
        self.lap.push(d);
    }
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lap_disclosures: Vec<LapDisclosure>,
}

/// Writes via a temporary name and rename, so readers never see a torn file.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))
}

/// Every output first, the manifest last.
pub fn commit(dir: &Path, artifacts: &Artifacts, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in &artifacts.files {
        write_atomic(dir, name, bytes)?;
        manifest.outputs.push(OutputEntry {
            file: name.clone(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    manifest.lap_disclosures = artifacts.lap.clone();
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    write_atomic(dir, MANIFEST, &body)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_checksums_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add("x.csv", b"a,b\n1,2\n".to_vec());
        let m = RunManifest {
            tool: "oscilab",
            version: "0",
            command: "t".into(),
            config: Value::Null,
            seed: 0,
            threads: 1,
            wall_time_s: 0.0,
            outputs: Vec::new(),
            lap_disclosures: Vec::new(),
        };
        let m = commit(dir.path(), &a, m).unwrap();
        assert_eq!(m.outputs[0].sha256, hex::encode(Sha256::digest(b"a,b\n1,2\n")));
        let mut names: Vec<String> =
            fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        names.sort();
        assert_eq!(names, vec!["manifest.json", "x.csv"]);
    }
}
