//! Artifact persistence: atomic writes, fixed-precision JSON and the run
//! manifest that lists every output with its SHA-256.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::LabError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Pretty JSON whose floats always carry 17 significant digits.
struct FixedDigits(PrettyFormatter<'static>);

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // serde_json maps non-finite floats to null before reaching here,
            // keep the same behaviour for safety
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("artifact types serialize infallibly");
    out.push(b'\n');
    out
}

pub fn from_json<T: DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| LabError::artifact(path, e))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(LabError::io(path, e));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config: ExperimentConfig,
    /// Files this run produced, relative to the output directory.
    pub outputs: Vec<String>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub runs: Vec<RunRecord>,
    /// Every artifact currently in the directory, sorted by path.
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn empty() -> Self {
        RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            runs: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, LabError> {
        from_json(&dir.join(MANIFEST_NAME))
    }

    /// Recomputes every listed hash; fails on the first missing or altered file.
    pub fn verify(&self, dir: &Path) -> Result<(), LabError> {
        for entry in &self.files {
            let path = dir.join(&entry.path);
            let bytes = fs::read(&path).map_err(|e| LabError::io(&path, e))?;
            let actual = sha256_hex(&bytes);
            if actual != entry.sha256 {
                return Err(LabError::artifact(
                    &path,
                    format!("hash mismatch: manifest {} vs file {actual}", entry.sha256),
                ));
            }
        }
        Ok(())
    }

    pub fn entry(&self, path: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == path)
    }
}

/// Collects the artifacts of one command and records them in the manifest.
pub struct RunWriter {
    dir: PathBuf,
    command: String,
    config: ExperimentConfig,
    written: Vec<FileEntry>,
    timings: Vec<StageTiming>,
}

impl RunWriter {
    pub fn new(dir: &Path, command: &str, config: &ExperimentConfig) -> Self {
        RunWriter {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: config.clone(),
            written: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, LabError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.retain(|f| f.path != name);
        self.written.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, LabError> {
        self.write(name, &to_json(value))
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Merges this run into the directory's manifest, creating it if needed.
    pub fn finish(self) -> Result<RunManifest, LabError> {
        let manifest_path = self.dir.join(MANIFEST_NAME);
        let mut manifest = if manifest_path.exists() {
            RunManifest::load(&self.dir)?
        } else {
            RunManifest::empty()
        };
        manifest.tool_version = TOOL_VERSION.to_string();
        for entry in &self.written {
            manifest.files.retain(|f| f.path != entry.path);
            manifest.files.push(entry.clone());
        }
        manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.runs.push(RunRecord {
            command: self.command,
            config: self.config,
            outputs: self.written.iter().map(|f| f.path.clone()).collect(),
            timings: self.timings,
        });
        write_atomic(&manifest_path, &to_json(&manifest))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits_and_round_trip() {
        let values = vec![0.1f64, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0];
        let text = String::from_utf8(to_json(&values)).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(text.contains("3.3333333333333331e-1"));
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn manifest_merges_and_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let mut first = RunWriter::new(dir.path(), "pressure", &cfg);
        first.write("a.json", b"{}").unwrap();
        first.finish().unwrap();
        let mut second = RunWriter::new(dir.path(), "dimension", &cfg);
        second.write("b.json", b"[]").unwrap();
        second.write("a.json", b"{ }").unwrap();
        let manifest = second.finish().unwrap();
        assert_eq!(manifest.runs.len(), 2);
        assert_eq!(manifest.files.iter().map(|f| f.path.as_str()).collect::<Vec<_>>(), ["a.json", "b.json"]);
        assert_eq!(manifest.entry("a.json").unwrap().sha256, sha256_hex(b"{ }"));

        let reloaded = RunManifest::load(dir.path()).unwrap();
        assert_eq!(reloaded, manifest);
        reloaded.verify(dir.path()).unwrap();
        fs::write(dir.path().join("b.json"), b"[1]").unwrap();
        assert_eq!(reloaded.verify(dir.path()).unwrap_err().exit_code(), 5);
    }
}
