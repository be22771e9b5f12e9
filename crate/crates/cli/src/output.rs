//! Output directory bookkeeping and the provenance record.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const PROVENANCE_FILE: &str = "provenance.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct FileRecord {
    file: String,
    sha256: String,
}

/// Inputs that determine a command's outputs.
#[derive(Debug, Default, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub model: Option<u8>,
    pub photons: Option<u64>,
    pub inputs: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        Provenance { command: command.to_owned(), ..Default::default() }
    }

    /// Records an input file by name and content hash.
    pub fn input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.push((label.to_owned(), sha256_hex(bytes)));
    }
}

/// Directory that collects a command's output files.
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_owned());
        Ok(())
    }

    pub fn csv<R: IntoIterator<Item = Vec<f64>>, S: AsRef<str>>(&mut self, name: &str, header: &[S], rows: R) -> Result<()> {
        let header: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        let mut buf = Vec::new();
        fluencelab::io::write_csv(&mut buf, &header, rows)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    /// Registers a file written by other means.
    pub fn adopt(&mut self, name: &str) {
        self.files.push(name.to_owned());
    }

    /// Writes the provenance record, listing every output with its hash.
    pub fn finish(self, provenance: Provenance) -> Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            tool: &'static str,
            version: &'static str,
            #[serde(flatten)]
            provenance: &'a Provenance,
            outputs: Vec<FileRecord>,
        }
        let mut names = self.files.clone();
        names.sort();
        names.dedup();
        let mut outputs = Vec::with_capacity(names.len());
        for name in names {
            let path = self.dir.join(&name);
            let bytes = fs::read(&path).with_context(|| format!("cannot read back {}", path.display()))?;
            outputs.push(FileRecord { file: name, sha256: sha256_hex(&bytes) });
        }
        let record = Record { tool: "fluencelab", version: env!("CARGO_PKG_VERSION"), provenance: &provenance, outputs };
        let mut buf = serde_json::to_vec_pretty(&record)?;
        buf.push(b'\n');
        let path = self.dir.join(PROVENANCE_FILE);
        fs::write(&path, buf).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

/// `2.85 -> "2.85"`, `10.0 -> "10"`; used in output file names.
pub fn label(v: f64) -> String {
    format!("{v}")
}
