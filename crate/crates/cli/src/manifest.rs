use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to re-run a command and check its outputs. No
/// timestamps, so identical runs give identical manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Path to sha256 of the content read.
    pub inputs: BTreeMap<String, String>,
    /// Path to sha256 of the content written.
    pub outputs: BTreeMap<String, String>,
    pub version: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Tracks what a command reads and writes.
#[derive(Debug, Default)]
pub struct Ctx {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
}

impl Ctx {
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Digests a file that a library loader will open itself.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.read(path).map(drop)
    }

    /// `-` goes to stdout and is not recorded.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if is_stdout(path) {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            return out.flush().map_err(Into::into);
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file written by someone else.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_owned(), seed);
    }

    pub fn finish(self, command: &str, argv: &[String], params: &impl Serialize) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_owned(),
            argv: argv.to_vec(),
            params: serde_json::to_value(params)?,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            version: env!("CARGO_PKG_VERSION").to_owned(),
        })
    }
}

/// `<out>.manifest.json` beside a file output; none for stdout.
pub fn beside(out: &Path) -> Option<PathBuf> {
    if is_stdout(out) {
        return None;
    }
    let mut name = out.file_name()?.to_os_string();
    name.push(".manifest.json");
    Some(out.with_file_name(name))
}

pub fn in_dir(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{}.manifest.json", command.replace(' ', "-")))
}

pub fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(m)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
