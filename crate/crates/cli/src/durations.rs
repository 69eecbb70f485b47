use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::{Args, ValueEnum};
use phonedur::durmod::{apply_random_walk, constant_scale, substitute_oracle, RandomWalkConfig};
use phonedur::hmm::{extract_durations, FrameAlignment, FrameAlignmentRecord};
use phonedur::stats::{build_histograms, export_histogram_csv, summary, KldOptions, KldWeighting};
use phonedur::upsample::{gaussian_upsample_weights, upsample_states, DEFAULT_SIGMA_G};
use phonedur::{io, AlignedUtterance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{matrix_path, to_json_line, usage, Context};
use crate::ModifyMode;

fn read_corpus(ctx: &mut Context, path: &PathBuf) -> Result<Vec<AlignedUtterance>> {
    ctx.input(path);
    Ok(io::read_alignments(path, &ctx.inventory)?)
}

fn emit_corpus(ctx: &mut Context, corpus: &[AlignedUtterance]) -> Result<()> {
    let text = io::alignments_to_jsonl(corpus, &ctx.inventory)?;
    ctx.emit(text.as_bytes())
}

#[derive(Args, Debug)]
pub struct DurationsArgs {
    /// Frame alignments written by `hmm-align`.
    #[arg(long)]
    pub input: PathBuf,
}

pub fn durations(ctx: &mut Context, a: &DurationsArgs) -> Result<()> {
    ctx.input(&a.input);
    let records: Vec<FrameAlignmentRecord> = io::read_jsonl(&a.input)?;
    let inv = ctx.inventory.clone();
    let corpus = records
        .par_iter()
        .map(|r| {
            let al = FrameAlignment::from_record(r, &inv)?;
            Ok(extract_durations(&al, &inv)?)
        })
        .collect::<Result<Vec<_>>>()?;
    emit_corpus(ctx, &corpus)
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
}

pub fn stats(ctx: &mut Context, a: &StatsArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.input)?;
    let s = summary(&corpus, &ctx.inventory)?;
    ctx.emit(&to_json_line(&s)?)
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Unweighted,
    Occurrence,
}

#[derive(Args, Debug)]
pub struct KldArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub weighting: Option<Weighting>,
    /// Also score `[space]` and silence tokens.
    #[arg(long)]
    pub include_boundaries: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KldConfig {
    pub epsilon: f64,
    pub weighting: Weighting,
    pub include_boundaries: bool,
}

impl Default for KldConfig {
    fn default() -> Self {
        Self {
            epsilon: phonedur::stats::DEFAULT_KLD_EPSILON,
            weighting: Weighting::Unweighted,
            include_boundaries: false,
        }
    }
}

pub fn kld(ctx: &mut Context, a: &KldArgs) -> Result<()> {
    let mut cfg: KldConfig = ctx.file_config()?;
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.weighting {
        cfg.weighting = v;
    }
    cfg.include_boundaries |= a.include_boundaries;
    if !(cfg.epsilon.is_finite() && cfg.epsilon > 0.0) {
        return Err(usage(format!("--epsilon must be positive, got {}", cfg.epsilon)));
    }
    ctx.resolved(&cfg);
    let pred = read_corpus(ctx, &a.pred)?;
    let reference = read_corpus(ctx, &a.reference)?;
    let opts = KldOptions {
        epsilon: cfg.epsilon,
        weighting: match cfg.weighting {
            Weighting::Unweighted => KldWeighting::Unweighted,
            Weighting::Occurrence => KldWeighting::Occurrence,
        },
        include_boundaries: cfg.include_boundaries,
    };
    let report = phonedur::stats::kld(&build_histograms(&pred), &build_histograms(&reference), &ctx.inventory, &opts)?;
    ctx.emit(&to_json_line(&report)?)
}

#[derive(Args, Debug)]
pub struct HistExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub phoneme: String,
}

pub fn hist_export(ctx: &mut Context, a: &HistExportArgs) -> Result<()> {
    let corpus = read_corpus(ctx, &a.input)?;
    ctx.inventory.id(&a.phoneme).map_err(|e| usage(e.to_string()))?;
    let csv = export_histogram_csv(&build_histograms(&corpus), &ctx.inventory, &a.phoneme)?;
    ctx.emit(csv.as_bytes())
}

#[derive(Args, Debug)]
pub struct ModifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModifyMode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub clip_lo: Option<f64>,
    #[arg(long)]
    pub clip_hi: Option<f64>,
    #[arg(long)]
    pub min_duration: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSetting {
    Constant,
    Walk,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModifyConfig {
    pub mode: ModeSetting,
    pub alpha: f64,
    #[serde(flatten)]
    pub walk: RandomWalkConfig,
}

impl Default for ModifyConfig {
    fn default() -> Self {
        Self {
            mode: ModeSetting::Walk,
            alpha: 1.0,
            walk: RandomWalkConfig::default(),
        }
    }
}

pub fn modify(ctx: &mut Context, a: &ModifyArgs) -> Result<()> {
    let mut cfg: ModifyConfig = ctx.file_config()?;
    if let Some(m) = a.mode {
        cfg.mode = match m {
            ModifyMode::Constant => ModeSetting::Constant,
            ModifyMode::Walk => ModeSetting::Walk,
        };
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    let w = &mut cfg.walk;
    if let Some(v) = a.sigma {
        w.sigma = v;
    }
    if let Some(v) = a.clip_lo {
        w.clip_lo = v;
    }
    if let Some(v) = a.clip_hi {
        w.clip_hi = v;
    }
    if let Some(v) = a.min_duration {
        w.min_duration = v;
    }
    w.seed = ctx.seed_or(w.seed);
    match cfg.mode {
        ModeSetting::Walk => cfg.walk.check().map_err(|e| usage(e.to_string()))?,
        ModeSetting::Constant if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) => {
            return Err(usage(format!("--alpha must be positive, got {}", cfg.alpha)));
        }
        ModeSetting::Constant => {}
    }
    ctx.resolved(&cfg);
    let corpus = read_corpus(ctx, &a.input)?;
    let out = corpus
        .par_iter()
        .map(|u| match cfg.mode {
            ModeSetting::Constant => constant_scale(u, cfg.alpha, cfg.walk.min_duration),
            ModeSetting::Walk => apply_random_walk(u, &cfg.walk),
        })
        .collect::<phonedur::Result<Vec<_>>>()?;
    emit_corpus(ctx, &out)
}

#[derive(Args, Debug)]
pub struct OracleSubArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

pub fn oracle_sub(ctx: &mut Context, a: &OracleSubArgs) -> Result<()> {
    let pred = read_corpus(ctx, &a.pred)?;
    let reference = read_corpus(ctx, &a.reference)?;
    let by_id: HashMap<&str, &AlignedUtterance> = reference.iter().map(|u| (u.id(), u)).collect();
    let out = pred
        .iter()
        .map(|p| {
            let r = by_id
                .get(p.id())
                .ok_or_else(|| anyhow::anyhow!("utterance {} has no reference", p.id()))?;
            Ok(substitute_oracle(p, r)?)
        })
        .collect::<Result<Vec<_>>>()?;
    emit_corpus(ctx, &out)
}

#[derive(Args, Debug)]
pub struct UpsampleArgs {
    /// Durations JSONL.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory of `<id>.fmat` phoneme-level vectors (phonemes × dims).
    /// Without it the weight matrices themselves are written.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(long)]
    pub sigma_g: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpsampleConfig {
    pub sigma_g: f64,
}

impl Default for UpsampleConfig {
    fn default() -> Self {
        Self { sigma_g: DEFAULT_SIGMA_G }
    }
}

pub fn upsample(ctx: &mut Context, a: &UpsampleArgs) -> Result<()> {
    let mut cfg: UpsampleConfig = ctx.file_config()?;
    if let Some(v) = a.sigma_g {
        cfg.sigma_g = v;
    }
    if !(cfg.sigma_g.is_finite() && cfg.sigma_g > 0.0) {
        return Err(usage(format!("--sigma-g must be positive, got {}", cfg.sigma_g)));
    }
    ctx.resolved(&cfg);
    let corpus = read_corpus(ctx, &a.input)?;
    if let Some(dir) = &a.states {
        ctx.input(dir);
    }
    let out_dir = ctx.out_dir()?;
    corpus.par_iter().try_for_each(|u| -> Result<()> {
        let w = gaussian_upsample_weights(u.durations(), cfg.sigma_g).with_context(|| format!("upsampling {}", u.id()))?;
        let m = match &a.states {
            Some(dir) => {
                let h = io::read_matrix(&matrix_path(dir, u.id()))?;
                upsample_states(&h, &w).with_context(|| format!("upsampling {}", u.id()))?
            }
            None => w.weights,
        };
        io::write_matrix(&out_dir.join(format!("{}.fmat", u.id())), &m)?;
        Ok(())
    })
}
