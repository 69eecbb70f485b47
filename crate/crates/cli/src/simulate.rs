use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use phonedur::io;
use phonedur::sim::{generate_predictions, generate_reference, run_sweep, SimConfig};
use phonedur::stats::KldOptions;
use phonedur::durmod::RandomWalkConfig;

use crate::common::{usage, Context};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub utterances: Option<usize>,
    #[arg(long)]
    pub utterance_length: Option<usize>,
    #[arg(long)]
    pub mean_shrink: Option<f64>,
    #[arg(long)]
    pub variance_shrink: Option<f64>,
    /// Walk step deviations to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Constant factors to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Also write the reference corpus as JSONL.
    #[arg(long)]
    pub reference_out: Option<PathBuf>,
    /// Also write the prediction corpus as JSONL.
    #[arg(long)]
    pub predictions_out: Option<PathBuf>,
}

pub fn simulate(ctx: &mut Context, a: &SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = ctx.file_config()?;
    if let Some(v) = a.utterances {
        cfg.utterances = v;
    }
    if let Some(v) = a.utterance_length {
        cfg.utterance_length = v;
    }
    if let Some(v) = a.mean_shrink {
        cfg.mean_shrink = v;
    }
    if let Some(v) = a.variance_shrink {
        cfg.variance_shrink = v;
    }
    if let Some(v) = &a.sigmas {
        cfg.sigmas = v.clone();
    }
    if let Some(v) = &a.alphas {
        cfg.alphas = v.clone();
    }
    cfg.seed = ctx.seed_or(cfg.seed);
    cfg.check().map_err(|e| usage(e.to_string()))?;
    ctx.resolved(&cfg);

    let inv = cfg.inventory();
    let reference = generate_reference(&cfg)?;
    let predictions = generate_predictions(&reference, &cfg)?;
    if let Some(path) = &a.reference_out {
        ctx.emit_to(path, io::alignments_to_jsonl(&reference, &inv)?.as_bytes())?;
    }
    if let Some(path) = &a.predictions_out {
        ctx.emit_to(path, io::alignments_to_jsonl(&predictions, &inv)?.as_bytes())?;
    }
    let walk = RandomWalkConfig {
        sigma: 0.0,
        clip_lo: cfg.clip_lo,
        clip_hi: cfg.clip_hi,
        seed: cfg.seed,
        min_duration: 0,
    };
    let opts = KldOptions {
        epsilon: cfg.kld_epsilon,
        ..Default::default()
    };
    let report = run_sweep(&reference, &predictions, &inv, &cfg.sigmas, &cfg.alphas, &walk, &opts)?;
    ctx.emit(report.to_csv().as_bytes())
}
