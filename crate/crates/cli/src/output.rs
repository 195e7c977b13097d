//! Atomic file output and run manifests.

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Writes through `f` into a temporary file next to `path`, then renames it
/// into place. Without a path the output goes to stdout.
pub fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => write_atomic(path, f),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// The one-line summary goes to stdout, or to stderr when stdout carries the
/// data itself.
pub fn summarize(out: Option<&Path>, line: String) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

pub fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        f(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub format: String,
    pub records: usize,
}

/// Everything needed to regenerate the outputs: the argument vector, the
/// resolved configuration and the versions. No timestamps or thread counts,
/// so reruns give identical manifests too.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub argv: Vec<String>,
    pub config: Value,
    pub outputs: Vec<OutputFile>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub results: Value,
}

impl Manifest {
    pub fn new(subcommand: &'static str, config: impl Serialize) -> Result<Self> {
        Ok(Manifest {
            tool: "npgrover",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            argv: reproducible_argv(),
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
            results: Value::Null,
        })
    }

    pub fn output(&mut self, path: &Path, format: &str, records: usize) {
        self.outputs.push(OutputFile { path: path.display().to_string(), format: format.into(), records });
    }

    pub fn with_results(mut self, results: impl Serialize) -> Result<Self> {
        self.results = serde_json::to_value(results)?;
        Ok(self)
    }

    /// Written next to `out` when there is one.
    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        let Some(out) = out else { return Ok(()) };
        write_atomic(&manifest_path(out), |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Arguments after the program name, minus `--threads` which never changes
/// the output.
fn reproducible_argv() -> Vec<String> {
    let mut out = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--threads" {
            args.next();
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out
}
