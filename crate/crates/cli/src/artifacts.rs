//! Atomic file output and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Writes `path` through a temporary file in the same directory, so readers
/// see either the old content or the complete new one.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut File) -> io::Result<()>) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    write(tmp.as_file_mut())
        .and_then(|_| tmp.as_file_mut().flush())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value)?;
        f.write_all(b"\n")
    })
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<u32>,
    /// Relative to the workspace when inside it.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
    /// Configuration the artifact was produced with.
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load(workspace: &Path) -> Result<Self, CliError> {
        let path = workspace.join(RUN_MANIFEST);
        match File::open(&path) {
            Ok(f) => serde_json::from_reader(BufReader::new(f))
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }

    pub fn artifact(&self, path: &Path) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == path)
    }

    /// Hashes `file` and records it, replacing any earlier entry for the
    /// same path, then rewrites the manifest.
    pub fn record(
        workspace: &Path,
        config: &PipelineConfig,
        stage: &str,
        layer: Option<u32>,
        file: &Path,
    ) -> Result<Artifact, CliError> {
        let mut manifest = Self::load(workspace)?;
        let bytes = fs::metadata(file).map_err(|e| CliError::io(file, e))?.len();
        let rel = file.strip_prefix(workspace).unwrap_or(file).to_path_buf();
        let artifact = Artifact {
            stage: stage.into(),
            layer,
            path: rel,
            sha256: sha256_file(file)?,
            bytes,
            config: config.clone(),
        };
        manifest.artifacts.retain(|a| a.path != artifact.path);
        manifest.artifacts.push(artifact.clone());
        manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        write_json_atomic(&workspace.join(RUN_MANIFEST), &manifest)?;
        Ok(artifact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        write_atomic(&p, |f| f.write_all(b"abc")).unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        let r = write_atomic(&p, |_| Err(io::Error::other("boom")));
        assert!(r.is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn record_replaces_entries() {
        let dir = tempfile::tempdir().unwrap();
        let ws = dir.path();
        let f = ws.join("a.bin");
        fs::write(&f, b"1").unwrap();
        let c = PipelineConfig::default();
        RunManifest::record(ws, &c, "x", None, &f).unwrap();
        fs::write(&f, b"22").unwrap();
        RunManifest::record(ws, &c, "x", None, &f).unwrap();
        let m = RunManifest::load(ws).unwrap();
        assert_eq!(m.artifacts.len(), 1);
        assert_eq!(m.artifacts[0].bytes, 2);
        assert_eq!(m.artifacts[0].path, Path::new("a.bin"));
    }
}
