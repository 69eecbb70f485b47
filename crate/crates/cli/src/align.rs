use std::fs;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::{Args, ValueEnum};
use phonedur::ctc::{ctc_viterbi_align, BlankAttachment, CtcAlignConfig, DEFAULT_BLANK_FLOOR};
use phonedur::hmm::{
    init_model, train_monophone, trim_silence, viterbi_align, HmmModel, TrainConfig, TrainingUtterance,
};
use phonedur::{io, EmissionMatrix, PhonemeInventory, Transcript};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{read_matrices, to_json_line, usage, Context};

#[derive(Args, Debug)]
pub struct CorpusArgs {
    /// Transcripts as alignment JSONL; durations are ignored.
    #[arg(long)]
    pub transcripts: PathBuf,
    /// Directory of `<id>.fmat` (or `<id>.csv`) feature matrices.
    #[arg(long)]
    pub features: PathBuf,
    /// Drop leading and trailing silent frames before use.
    #[arg(long)]
    pub trim: bool,
    /// Feature column holding frame energy in dB.
    #[arg(long)]
    pub energy_dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold_db: Option<f64>,
}

#[derive(Args, Debug)]
pub struct HmmTrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub em_iters: Option<usize>,
    #[arg(long)]
    pub split_iters: Option<usize>,
    #[arg(long)]
    pub reest_iters: Option<usize>,
    #[arg(long)]
    pub max_mixtures: Option<usize>,
    #[arg(long)]
    pub allow_optional_silence: Option<bool>,
    #[arg(long)]
    pub variance_floor_scale: Option<f64>,
    /// Training report (objective per iteration) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HmmAlignArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Model JSON written by `hmm-init` or `hmm-train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub allow_optional_silence: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub trim: bool,
}

impl HmmConfig {
    fn apply_corpus(&mut self, a: &CorpusArgs) {
        self.trim |= a.trim;
        if let Some(v) = a.energy_dim {
            self.train.energy_dim = v;
        }
        if let Some(v) = a.threshold_db {
            self.train.threshold_db = v;
        }
    }
}

fn hmm_config(ctx: &mut Context, a: &HmmTrainArgs) -> Result<HmmConfig> {
    let mut cfg: HmmConfig = ctx.file_config()?;
    cfg.apply_corpus(&a.corpus);
    let t = &mut cfg.train;
    if let Some(v) = a.em_iters {
        t.em_iters = v;
    }
    if let Some(v) = a.split_iters {
        t.split_iters = v;
    }
    if let Some(v) = a.reest_iters {
        t.reest_iters = v;
    }
    if let Some(v) = a.max_mixtures {
        t.max_mixtures = v;
    }
    if let Some(v) = a.allow_optional_silence {
        t.allow_optional_silence = v;
    }
    if let Some(v) = a.variance_floor_scale {
        t.variance_floor_scale = v;
    }
    t.seed = ctx.seed_or(t.seed);
    ctx.resolved(&cfg);
    Ok(cfg)
}

fn load_corpus(ctx: &mut Context, a: &CorpusArgs, cfg: &HmmConfig) -> Result<Vec<TrainingUtterance>> {
    ctx.input(&a.transcripts);
    ctx.input(&a.features);
    let transcripts = io::read_transcripts(&a.transcripts, &ctx.inventory)?;
    let ids: Vec<&str> = transcripts.iter().map(|t| t.id.as_str()).collect();
    let features = read_matrices(&a.features, &ids)?;
    transcripts
        .into_par_iter()
        .zip(features)
        .map(|(transcript, f)| {
            let features = if cfg.trim {
                trim_silence(&f, cfg.train.energy_dim, cfg.train.threshold_db)
                    .with_context(|| format!("trimming {}", transcript.id))?
            } else {
                f
            };
            Ok(TrainingUtterance { transcript, features })
        })
        .collect()
}

pub fn hmm_init(ctx: &mut Context, a: &HmmTrainArgs) -> Result<()> {
    let cfg = hmm_config(ctx, a)?;
    let corpus = load_corpus(ctx, &a.corpus, &cfg)?;
    let model = init_model(&corpus, &ctx.inventory, &cfg.train)?;
    write_model(ctx, &model)
}

pub fn hmm_train(ctx: &mut Context, a: &HmmTrainArgs) -> Result<()> {
    let cfg = hmm_config(ctx, a)?;
    let corpus = load_corpus(ctx, &a.corpus, &cfg)?;
    let (model, report) = train_monophone(&corpus, &ctx.inventory, &cfg.train)?;
    for (i, phase) in report.phases.iter().enumerate() {
        eprintln!(
            "phase {i}: {} components max, objective/frame {:?}",
            phase.max_mixtures,
            phase.objective_per_frame.last()
        );
    }
    if let Some(path) = &a.report {
        ctx.emit_to(path, &to_json_line(&report)?)?;
    }
    write_model(ctx, &model)
}

fn write_model(ctx: &mut Context, model: &HmmModel) -> Result<()> {
    let mut text = model.to_json();
    text.push('\n');
    ctx.emit(text.as_bytes())
}

pub fn hmm_align(ctx: &mut Context, a: &HmmAlignArgs) -> Result<()> {
    let mut cfg: HmmConfig = ctx.file_config()?;
    cfg.apply_corpus(&a.corpus);
    if let Some(v) = a.allow_optional_silence {
        cfg.train.allow_optional_silence = v;
    }
    ctx.resolved(&cfg);
    ctx.input(&a.model);
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = HmmModel::from_json(&text, &ctx.inventory).with_context(|| format!("model {}", a.model.display()))?;
    let corpus = load_corpus(ctx, &a.corpus, &cfg)?;
    let inv = &ctx.inventory;
    let records = corpus
        .par_iter()
        .map(|u| {
            let al = viterbi_align(&model, &u.features, &u.transcript, cfg.train.allow_optional_silence)
                .with_context(|| format!("aligning {}", u.transcript.id))?;
            Ok(al.to_record(inv)?)
        })
        .collect::<Result<Vec<_>>>()?;
    ctx.emit(io::to_jsonl(&records).as_bytes())
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Attach {
    Forward,
    Backward,
}

#[derive(Args, Debug)]
pub struct CtcAlignArgs {
    /// Directory of `<id>.fmat` emission log-posteriors (frames × vocabulary).
    #[arg(long)]
    pub emissions: PathBuf,
    #[arg(long)]
    pub transcripts: PathBuf,
    /// Emission column symbols, one per line (default: blank then the inventory).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub blank_symbol: Option<String>,
    #[arg(long)]
    pub blank_floor: Option<f64>,
    #[arg(long, value_enum)]
    pub attach: Option<Attach>,
    /// Emissions are unnormalized logits; apply log-softmax first.
    #[arg(long)]
    pub logits: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtcConfig {
    pub blank_symbol: String,
    pub blank_floor: f64,
    pub attach: BlankAttachment,
    pub logits: bool,
}

impl Default for CtcConfig {
    fn default() -> Self {
        Self {
            blank_symbol: "<blank>".into(),
            blank_floor: DEFAULT_BLANK_FLOOR,
            attach: BlankAttachment::Forward,
            logits: false,
        }
    }
}

fn vocabulary(ctx: &mut Context, a: &CtcAlignArgs, cfg: &CtcConfig) -> Result<Vec<String>> {
    match &a.vocab {
        Some(path) => {
            ctx.input(path);
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect())
        }
        None => Ok(std::iter::once(cfg.blank_symbol.clone())
            .chain(ctx.inventory.symbols().iter().cloned())
            .collect()),
    }
}

fn label_columns(vocab: &[String], t: &Transcript, inv: &PhonemeInventory) -> Result<Vec<usize>> {
    t.phonemes
        .iter()
        .map(|&p| {
            let sym = inv.symbol(p)?;
            vocab
                .iter()
                .position(|v| v == sym)
                .ok_or_else(|| anyhow::anyhow!("utterance {}: {sym} is not in the emission vocabulary", t.id))
        })
        .collect()
}

pub fn ctc_align(ctx: &mut Context, a: &CtcAlignArgs) -> Result<()> {
    let mut cfg: CtcConfig = ctx.file_config()?;
    if let Some(v) = &a.blank_symbol {
        cfg.blank_symbol = v.clone();
    }
    if let Some(v) = a.blank_floor {
        cfg.blank_floor = v;
    }
    if let Some(v) = a.attach {
        cfg.attach = match v {
            Attach::Forward => BlankAttachment::Forward,
            Attach::Backward => BlankAttachment::Backward,
        };
    }
    cfg.logits |= a.logits;
    if !(cfg.blank_floor > 0.0 && cfg.blank_floor <= 1.0) {
        return Err(usage(format!("--blank-floor must lie in (0, 1], got {}", cfg.blank_floor)));
    }
    ctx.resolved(&cfg);
    let vocab = vocabulary(ctx, a, &cfg)?;
    let blank = vocab
        .iter()
        .position(|v| *v == cfg.blank_symbol)
        .ok_or_else(|| usage(format!("blank symbol {} is not in the vocabulary", cfg.blank_symbol)))?;
    ctx.input(&a.emissions);
    ctx.input(&a.transcripts);
    let inv = ctx.inventory.clone();
    let transcripts = io::read_transcripts(&a.transcripts, &inv)?;
    let ids: Vec<&str> = transcripts.iter().map(|t| t.id.as_str()).collect();
    let emissions = read_matrices(&a.emissions, &ids)?;
    let align_cfg = CtcAlignConfig {
        blank_floor: cfg.blank_floor,
        attach: cfg.attach,
    };
    let corpus = transcripts
        .par_iter()
        .zip(emissions)
        .map(|(t, m)| {
            if m.cols() != vocab.len() {
                anyhow::bail!("utterance {}: {} emission columns for {} vocabulary entries", t.id, m.cols(), vocab.len());
            }
            let e = if cfg.logits {
                EmissionMatrix::from_logits(&m, blank)?
            } else {
                EmissionMatrix::new(m, blank)?
            };
            let labels = label_columns(&vocab, t, &inv)?;
            ctc_viterbi_align(&t.id, &e, &labels, &t.phonemes, t.frame_shift_ms, &align_cfg)
                .with_context(|| format!("aligning {}", t.id))
        })
        .collect::<Result<Vec<_>>>()?;
    ctx.emit(io::alignments_to_jsonl(&corpus, &inv)?.as_bytes())
}
