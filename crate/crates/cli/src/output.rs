//! Staged output directory and the run manifest.
//!
//! Files are written under a staging directory inside the output directory
//! and moved into place only after the whole command has succeeded.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Plan;

pub const MANIFEST: &str = "manifest.json";
const STAGING: &str = ".staging";

pub struct Staging {
    out: PathBuf,
    root: PathBuf,
    /// Directories replaced wholesale on commit.
    replaced: Vec<String>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self> {
        let root = out.join(STAGING);
        if root.exists() {
            fs::remove_dir_all(&root)
                .with_context(|| format!("cannot clear {}", root.display()))?;
        }
        fs::create_dir_all(&root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Staging {
            out: out.to_path_buf(),
            root,
            replaced: Vec::new(),
            committed: false,
        })
    }

    /// Opens a staged file at `relative` for writing.
    pub fn create(&self, relative: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    /// Writes one staged file through `body`.
    pub fn write<F>(&self, relative: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> drought_core::Result<()>,
    {
        let mut w = self.create(relative)?;
        body(&mut w).with_context(|| format!("cannot write {relative}"))?;
        w.flush().with_context(|| format!("cannot write {relative}"))?;
        Ok(())
    }

    pub fn write_bytes(&self, relative: &str, bytes: &[u8]) -> Result<()> {
        let mut w = self.create(relative)?;
        w.write_all(bytes)?;
        w.flush().with_context(|| format!("cannot write {relative}"))
    }

    /// Marks a subdirectory whose previous contents are dropped on commit.
    pub fn replace_dir(&mut self, relative: &str) {
        self.replaced.push(relative.to_string());
    }

    /// Moves staged files into the output directory and rewrites the
    /// manifest over everything the directory now holds.
    pub fn commit(mut self, plan: &Plan, command: &str) -> Result<()> {
        for dir in &self.replaced {
            let target = self.out.join(dir);
            if target.exists() {
                fs::remove_dir_all(&target)
                    .with_context(|| format!("cannot replace {}", target.display()))?;
            }
        }
        for relative in list_files(&self.root)? {
            let target = self.out.join(&relative);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(self.root.join(&relative), &target)
                .with_context(|| format!("cannot move {relative} into place"))?;
        }
        fs::remove_dir_all(&self.root)?;
        self.committed = true;
        write_manifest(&self.out, plan, command)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.root);
        }
    }
}

/// Relative paths of all regular files below `root`, sorted, with `/`
/// separators.
fn list_files(root: &Path) -> Result<Vec<String>> {
    fn walk(dir: &Path, prefix: &str, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let relative = if prefix.is_empty() {
                name.clone()
            } else {
                format!("{prefix}/{name}")
            };
            if entry.file_type()?.is_dir() {
                walk(&entry.path(), &relative, out)?;
            } else {
                out.push(relative);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, "", &mut out)?;
    out.sort();
    Ok(out)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_hash: String,
    detect_hash: String,
    taus: Vec<f64>,
    durations: DurationRecord,
    files: Vec<FileRecord>,
}

#[derive(Serialize)]
struct DurationRecord {
    max: usize,
    min: usize,
    step: usize,
    approximate: bool,
}

#[derive(Serialize)]
struct FileRecord {
    path: String,
    bytes: u64,
    sha256: String,
}

fn write_manifest(out: &Path, plan: &Plan, command: &str) -> Result<()> {
    let mut files = Vec::new();
    for relative in list_files(out)? {
        if relative == MANIFEST || relative.starts_with(STAGING) {
            continue;
        }
        let path = out.join(&relative);
        files.push(FileRecord {
            bytes: fs::metadata(&path)?.len(),
            sha256: sha256_file(&path)?,
            path: relative,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config_hash: plan.config_hash.clone(),
        detect_hash: plan.detect_hash.clone(),
        taus: plan.taus.levels().iter().map(|t| t.as_f64()).collect(),
        durations: DurationRecord {
            max: plan.durations.max(),
            min: plan.durations.min(),
            step: plan.duration_step,
            approximate: plan.durations.is_approximate(),
        },
        files,
    };
    let path = out.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}
