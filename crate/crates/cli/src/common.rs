use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};
use phonedur::{io, Matrix, PhonemeInventory};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::GlobalArgs;

/// Bad invocation detected after argument parsing; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub struct Context {
    pub global: GlobalArgs,
    pub inventory: PhonemeInventory,
    subcommand: &'static str,
    start: Instant,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Context {
    pub fn new(global: GlobalArgs, subcommand: &'static str) -> Result<Self> {
        if let Some(jobs) = global.jobs {
            if jobs == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .context("starting worker pool")?;
        }
        let inventory = match &global.inventory {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading inventory {}", path.display()))?;
                PhonemeInventory::parse(&text, &global.space_symbol, &global.silence_symbol)
                    .with_context(|| format!("inventory {}", path.display()))?
            }
            None => {
                let default = PhonemeInventory::arpabet();
                if global.space_symbol != default.symbols()[default.space().index()]
                    || global.silence_symbol != default.symbols()[default.silence().index()]
                {
                    return Err(usage("custom boundary symbols need an --inventory file"));
                }
                default
            }
        };
        let mut ctx = Self {
            global,
            inventory,
            subcommand,
            start: Instant::now(),
            config: serde_json::Value::Null,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        };
        if let Some(path) = ctx.global.inventory.clone() {
            ctx.input(&path);
        }
        Ok(ctx)
    }

    /// Settings from `--config`, or defaults; flags are applied by the caller.
    pub fn file_config<T: DeserializeOwned + Default>(&mut self) -> Result<T> {
        let Some(path) = self.global.config.clone() else {
            return Ok(T::default());
        };
        let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
        self.input(&path);
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    /// Records the fully resolved settings in the manifest.
    pub fn resolved<T: Serialize>(&mut self, config: &T) {
        self.config = serde_json::to_value(config).expect("configs serialize");
    }

    pub fn seed_or(&mut self, fallback: u64) -> u64 {
        let seed = self.global.seed.unwrap_or(fallback);
        self.seed = Some(seed);
        seed
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    /// Writes the main output to `--out` or stdout.
    pub fn emit(&mut self, bytes: &[u8]) -> Result<()> {
        match self.global.out.clone() {
            Some(path) => {
                io::write_bytes(&path, bytes)?;
                self.outputs.push(path.display().to_string());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes).context("writing stdout")?;
                stdout.flush().context("writing stdout")?;
            }
        }
        Ok(())
    }

    /// Writes a secondary output file.
    pub fn emit_to(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        io::write_bytes(path, bytes)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// `--out` as a directory, created if needed.
    pub fn out_dir(&mut self) -> Result<PathBuf> {
        let dir = self
            .global
            .out
            .clone()
            .ok_or_else(|| usage(format!("{} writes a directory; pass --out DIR", self.subcommand)))?;
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        self.outputs.push(dir.display().to_string());
        Ok(dir)
    }

    pub fn finish(self) -> Result<()> {
        let path = match (&self.global.manifest, &self.global.out) {
            (Some(m), _) => m.clone(),
            (None, Some(out)) => PathBuf::from(format!("{}.manifest.json", out.display())),
            (None, None) => return Ok(()),
        };
        let manifest = RunManifest {
            tool: "phonedur",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.to_string(),
            argv: std::env::args().collect(),
            config: self.config,
            seed: self.seed,
            jobs: self.global.jobs,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        io::write_bytes(&path, text.as_bytes())?;
        Ok(())
    }
}

/// Matrix for utterance `id` in `dir`: `<id>.fmat`, else `<id>.csv`.
pub fn matrix_path(dir: &Path, id: &str) -> PathBuf {
    let fmat = dir.join(format!("{id}.fmat"));
    if fmat.exists() {
        return fmat;
    }
    let csv = dir.join(format!("{id}.csv"));
    if csv.exists() {
        csv
    } else {
        fmat
    }
}

pub fn read_matrices(dir: &Path, ids: &[&str]) -> Result<Vec<Matrix>> {
    ids.par_iter()
        .map(|id| Ok(io::read_matrix(&matrix_path(dir, id))?))
        .collect()
}

pub fn to_json_line<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}
